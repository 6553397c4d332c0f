use lfdepth::epi::{fine_to_coarse_detailed, EpiParams};
use lfdepth::eval::{error_map, mse, run_benchmark, Algorithm, BenchmarkParams, Scene};
use lfdepth::io::{
    load_lightfield, save_scene, synth_scene, Layer, Region, SynthSpec, TextureSpec,
};
use lfdepth::sweep::{estimate_sweep, SweepParams};
use lfdepth::{DisparityMap, SceneMeta};

fn meta() -> SceneMeta {
    SceneMeta::new("pipeline", 100.0, 0.5, -2.0, 2.0).unwrap()
}

/// Textured background at -1.2 with a flat 20×12 patch on the same plane,
/// clear of the textured square at 0.8 in front.
fn patched_scene() -> (SynthSpec, [f64; 4]) {
    let patch = [50.0, 4.0, 70.0, 16.0];
    let mut spec = SynthSpec::nested_layers(128, 9, &[-1.2, 0.8], 21);
    spec.layers.insert(
        0,
        Layer {
            disparity: -1.2,
            texture: TextureSpec::flat(0.5),
            region: Region::Rect {
                x0: patch[0],
                y0: patch[1],
                x1: patch[2],
                y1: patch[3],
            },
        },
    );
    (spec, patch)
}

#[test]
fn coarse_levels_fill_a_textureless_region() {
    let (spec, [x0, y0, x1, y1]) = patched_scene();
    let (lf, gt) = synth_scene(&spec).unwrap();
    let pyr = fine_to_coarse_detailed(&lf, &EpiParams::for_scene(&meta())).unwrap();

    let inside: Vec<(usize, usize)> = (y0 as usize..y1 as usize)
        .flat_map(|y| (x0 as usize..x1 as usize).map(move |x| (x, y)))
        .collect();
    let holes: Vec<_> = inside
        .iter()
        .filter(|&&(x, y)| !pyr.levels[0].is_valid(x, y))
        .collect();
    assert!(holes.len() > inside.len() / 4, "{} holes", holes.len());
    let from_coarse = holes
        .iter()
        .filter(|&&&(x, y)| pyr.merged.is_valid(x, y))
        .count();
    assert!(
        from_coarse * 2 > holes.len(),
        "{from_coarse} of {} filled by coarse levels",
        holes.len()
    );

    let mae = |d: &DisparityMap| {
        let mut s = 0.0;
        for y in 0..128 {
            for x in 0..128 {
                s += (d.get(x, y).unwrap() - gt.get(x, y).unwrap()).abs();
            }
        }
        s / (128.0 * 128.0)
    };
    let all = mae(&pyr.disparity);
    assert!(all < 0.15, "MAE {all}");
    let patch_err = holes
        .iter()
        .map(|&&(x, y)| (pyr.disparity.get(x, y).unwrap() + 1.2).abs())
        .sum::<f64>()
        / holes.len() as f64;
    assert!(patch_err < 0.15, "patch MAE {patch_err}");
}

#[test]
fn sweep_errors_concentrate_at_occlusions() {
    let (lf, gt) = synth_scene(&SynthSpec::nested_layers(96, 7, &[-1.4, 0.6], 4)).unwrap();
    let d = estimate_sweep(&lf, &SweepParams::for_scene(&meta())).unwrap();
    let e = error_map(&d, &gt).unwrap();
    let (mut band, mut nb, mut inner, mut ni) = (0.0, 0, 0.0, 0);
    let near_edge = |x: usize, y: usize| {
        let g = gt.get(x, y).unwrap();
        (x.saturating_sub(2)..=(x + 2).min(95)).any(|xx| {
            (y.saturating_sub(2)..=(y + 2).min(95)).any(|yy| gt.get(xx, yy).unwrap() != g)
        })
    };
    // Skip the frame border, where views sample outside the image.
    for y in 8..88 {
        for x in 8..88 {
            if near_edge(x, y) {
                band += e[[y, x]];
                nb += 1;
            } else {
                inner += e[[y, x]];
                ni += 1;
            }
        }
    }
    let (band, inner) = (band / nb as f64, inner / ni as f64);
    assert!(nb > 0 && band > inner, "band {band} vs interior {inner}");
}

#[test]
fn saved_scene_benchmarks_like_its_quantized_source() {
    let tmp = tempfile::tempdir().unwrap();
    let (lf, gt) = synth_scene(&SynthSpec::nested_layers(40, 5, &[-0.8, 0.4], 2)).unwrap();
    let cfg = save_scene(tmp.path(), &lf, &meta(), Some(&gt)).unwrap();
    let (disk, m, disk_gt) = load_lightfield(&cfg).unwrap();
    // Ground truth is stored in single precision.
    let gt = gt.map_valid(|v| v as f32 as f64);
    assert_eq!(disk_gt.as_ref(), Some(&gt));

    let params = BenchmarkParams {
        repetitions: 1,
        ..BenchmarkParams::for_scene(&m)
    };
    let from_disk = Scene {
        lf: disk,
        meta: m.clone(),
        gt: disk_gt,
    };
    let in_memory = Scene {
        lf: lf.quantized_8bit(),
        meta: m,
        gt: Some(gt.clone()),
    };
    let a = run_benchmark(&from_disk, &Algorithm::ALL, &params).unwrap();
    let b = run_benchmark(&in_memory, &Algorithm::ALL, &params).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert_eq!(
            (ra.mse, ra.psnr_db),
            (rb.mse, rb.psnr_db),
            "{}",
            ra.algorithm
        );
    }
    let sweep = estimate_sweep(&from_disk.lf, &params.sweep).unwrap();
    assert_eq!(mse(&sweep, &gt).unwrap(), a.row("sweep").unwrap().mse);
}
