//! Scene configuration files and sub-aperture grid loading.
//!
//! A scene config is UTF-8 `key=value` text with `#` comments:
//!
//! ```text
//! name=boxes
//! n_u=9
//! n_v=9
//! focal_length_px=100
//! baseline=0.5
//! disp_min=-2
//! disp_max=2
//! gt=gt.pfm                    # optional
//! pattern=input_Cam{NNN}.png   # optional, this is the default
//! image_dir=.                  # optional, relative to the config file
//! ```
//!
//! View `(u, v)` has index `v·n_u + u`; `{NNN}` in the pattern expands to the
//! index zero-padded to as many digits as there are `N`s.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::pfm::{read_disparity_pfm, write_disparity_pfm};
use crate::io::png::{read_view_png, write_view_png};
use crate::lightfield::{LightField, SceneMeta};
use crate::maps::DisparityMap;

pub const DEFAULT_PATTERN: &str = "input_Cam{NNN}.png";
pub const CONFIG_FILE: &str = "scene.cfg";
pub const GT_FILE: &str = "gt.pfm";

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub image_dir: PathBuf,
    pub pattern: String,
    pub n_u: usize,
    pub n_v: usize,
    pub meta: SceneMeta,
    pub gt_path: Option<PathBuf>,
}

/// Parses flat `key=value` text. Blank lines and `#` comments are skipped;
/// duplicate keys are an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected key=value, got {content:?}"),
        })?;
        let key = k.trim().to_string();
        if out
            .insert(key.clone(), (line, v.trim().to_string()))
            .is_some()
        {
            return Err(Error::Config {
                line,
                message: format!("duplicate key {key}"),
            });
        }
    }
    Ok(out)
}

impl SceneConfig {
    /// `base_dir` anchors relative `image_dir` and `gt` paths.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv = parse_key_values(text)?;
        let mut take = |key: &str| kv.remove(key);
        fn num<T: std::str::FromStr>(key: &str, entry: Option<(usize, String)>) -> Result<T> {
            let (line, v) = entry.ok_or_else(|| Error::Config {
                line: 0,
                message: format!("missing key {key}"),
            })?;
            v.parse().map_err(|_| Error::Config {
                line,
                message: format!("{key}: cannot parse {v:?}"),
            })
        }
        let name = take("name")
            .map(|(_, v)| v)
            .unwrap_or_else(|| "scene".into());
        let n_u: usize = num("n_u", take("n_u"))?;
        let n_v: usize = num("n_v", take("n_v"))?;
        let focal: f64 = num("focal_length_px", take("focal_length_px"))?;
        let baseline: f64 = num("baseline", take("baseline"))?;
        let dmin: f64 = num("disp_min", take("disp_min"))?;
        let dmax: f64 = num("disp_max", take("disp_max"))?;
        let gt_path = take("gt").map(|(_, v)| base_dir.join(v));
        let pattern = take("pattern")
            .map(|(_, v)| v)
            .unwrap_or_else(|| DEFAULT_PATTERN.into());
        let image_dir = take("image_dir")
            .map(|(_, v)| base_dir.join(v))
            .unwrap_or_else(|| base_dir.to_path_buf());
        if let Some((key, (line, _))) = kv.into_iter().next() {
            return Err(Error::Config {
                line,
                message: format!("unknown key {key}"),
            });
        }
        if n_u == 0 || n_v == 0 {
            return Err(Error::Config {
                line: 0,
                message: "n_u and n_v must be at least 1".into(),
            });
        }
        if n_u * n_v > 1 && !pattern.contains("{N") {
            return Err(Error::Config {
                line: 0,
                message: format!("pattern {pattern:?} has no {{NNN}} placeholder"),
            });
        }
        let meta =
            SceneMeta::new(name, focal, baseline, dmin, dmax).map_err(|e| Error::Config {
                line: 0,
                message: e.to_string(),
            })?;
        Ok(SceneConfig {
            image_dir,
            pattern,
            n_u,
            n_v,
            meta,
            gt_path,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Serialises with paths relative to `dir` where possible.
    pub fn to_text(&self, dir: &Path) -> String {
        let rel = |p: &Path| {
            p.strip_prefix(dir)
                .map(|r| {
                    if r.as_os_str().is_empty() {
                        PathBuf::from(".")
                    } else {
                        r.to_path_buf()
                    }
                })
                .unwrap_or_else(|_| p.to_path_buf())
        };
        let m = &self.meta;
        let mut s = format!(
            "name={}\nn_u={}\nn_v={}\nfocal_length_px={}\nbaseline={}\ndisp_min={}\ndisp_max={}\npattern={}\nimage_dir={}\n",
            m.name,
            self.n_u,
            self.n_v,
            m.focal_length_px,
            m.baseline,
            m.disparity_min,
            m.disparity_max,
            self.pattern,
            rel(&self.image_dir).display(),
        );
        if let Some(gt) = &self.gt_path {
            s.push_str(&format!("gt={}\n", rel(gt).display()));
        }
        s
    }

    pub fn view_index(&self, u: usize, v: usize) -> usize {
        v * self.n_u + u
    }

    pub fn view_path(&self, index: usize) -> PathBuf {
        self.image_dir.join(expand_pattern(&self.pattern, index))
    }
}

/// Replaces the first `{N…N}` run with `index` zero-padded to its width.
pub fn expand_pattern(pattern: &str, index: usize) -> String {
    if let Some(start) = pattern.find("{N") {
        if let Some(len) = pattern[start + 1..].find('}') {
            let inner = &pattern[start + 1..start + 1 + len];
            if inner.chars().all(|c| c == 'N') {
                let width = inner.len();
                return format!(
                    "{}{:0width$}{}",
                    &pattern[..start],
                    index,
                    &pattern[start + 2 + len..],
                );
            }
        }
    }
    pattern.to_string()
}

/// Loads all `n_u·n_v` views and the optional ground truth.
pub fn load_lightfield(cfg: &SceneConfig) -> Result<(LightField, SceneMeta, Option<DisparityMap>)> {
    let n = cfg.n_u * cfg.n_v;
    let paths: Vec<PathBuf> = (0..n).map(|i| cfg.view_path(i)).collect();
    if let Some((index, path)) = paths.iter().enumerate().find(|(_, p)| !p.is_file()) {
        return Err(Error::MissingView {
            index,
            path: path.clone(),
        });
    }
    let views: Vec<Array3<f64>> = paths.par_iter().map(read_view_png).collect::<Result<_>>()?;
    let shape = |a: &Array3<f64>| {
        let (h, w, c) = a.dim();
        (w as u32, h as u32, c)
    };
    let expected = shape(&views[0]);
    for (index, view) in views.iter().enumerate() {
        if shape(view) != expected {
            return Err(Error::ViewShape {
                index,
                path: paths[index].clone(),
                expected,
                found: shape(view),
            });
        }
    }
    let lf = LightField::from_views(&views, cfg.n_u, cfg.n_v)?;
    let gt = match &cfg.gt_path {
        Some(p) => {
            let d = read_disparity_pfm(p)?;
            if d.dim() != (lf.height(), lf.width()) {
                return Err(Error::DimensionMismatch {
                    expected: (lf.height(), lf.width()),
                    found: d.dim(),
                });
            }
            Some(d)
        }
        None => None,
    };
    Ok((lf, cfg.meta.clone(), gt))
}

/// Writes views, optional ground truth and `scene.cfg` into `dir`.
pub fn save_scene(
    dir: impl AsRef<Path>,
    lf: &LightField,
    meta: &SceneMeta,
    gt: Option<&DisparityMap>,
) -> Result<SceneConfig> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = SceneConfig {
        image_dir: dir.to_path_buf(),
        pattern: DEFAULT_PATTERN.into(),
        n_u: lf.n_u(),
        n_v: lf.n_v(),
        meta: meta.clone(),
        gt_path: gt.map(|_| dir.join(GT_FILE)),
    };
    let views: Vec<(usize, usize)> = (0..lf.n_v())
        .flat_map(|v| (0..lf.n_u()).map(move |u| (u, v)))
        .collect();
    views.par_iter().try_for_each(|&(u, v)| {
        write_view_png(
            &lf.view(u, v).to_owned(),
            cfg.view_path(cfg.view_index(u, v)),
        )
    })?;
    if let (Some(d), Some(p)) = (gt, &cfg.gt_path) {
        write_disparity_pfm(d, p)?;
    }
    let cfg_path = dir.join(CONFIG_FILE);
    fs::write(&cfg_path, cfg.to_text(dir)).map_err(|e| Error::io(&cfg_path, e))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "# test scene\nname=boxes\nn_u=9\nn_v=9\nfocal_length_px=100\nbaseline=0.5\ndisp_min=-2\ndisp_max=2\n";

    #[test]
    fn parses_defaults() {
        let cfg = SceneConfig::parse(BASIC, Path::new("/data")).unwrap();
        assert_eq!(cfg.n_u, 9);
        assert_eq!(cfg.meta.disparity_min, -2.0);
        assert_eq!(cfg.pattern, DEFAULT_PATTERN);
        assert_eq!(cfg.view_path(80), Path::new("/data/input_Cam080.png"));
        assert_eq!(cfg.view_index(3, 2), 21);
        assert!(cfg.gt_path.is_none());
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        let bad = format!("{BASIC}colour=red\n");
        assert!(matches!(
            SceneConfig::parse(&bad, Path::new(".")),
            Err(Error::Config { line: 9, .. })
        ));
        let bad = BASIC.replace("n_u=9", "n_u=nine");
        assert!(SceneConfig::parse(&bad, Path::new(".")).is_err());
        let bad = BASIC.replace("disp_max=2", "disp_max=-3");
        assert!(SceneConfig::parse(&bad, Path::new(".")).is_err());
        assert!(SceneConfig::parse("n_u=1\n", Path::new(".")).is_err());
        assert!(SceneConfig::parse("garbage\n", Path::new(".")).is_err());
    }

    #[test]
    fn pattern_expansion() {
        assert_eq!(expand_pattern("input_Cam{NNN}.png", 7), "input_Cam007.png");
        assert_eq!(expand_pattern("v{NNNNN}.png", 123), "v00123.png");
        assert_eq!(expand_pattern("single.png", 0), "single.png");
    }

    fn tiny_field(n_u: usize, n_v: usize) -> LightField {
        LightField::from_fn(6, 4, n_u, n_v, 1, |x, y, u, v, _| {
            ((x + 2 * y + 3 * u + 5 * v) % 11) as f64 / 10.0
        })
        .unwrap()
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lf = tiny_field(3, 3);
        let meta = SceneMeta::new("t", 50.0, 1.0, -1.0, 1.0).unwrap();
        let gt = DisparityMap::constant(6, 4, 0.25);
        save_scene(dir.path(), &lf, &meta, Some(&gt)).unwrap();
        let cfg = SceneConfig::read(dir.path().join(CONFIG_FILE)).unwrap();
        let (back, m, g) = load_lightfield(&cfg).unwrap();
        assert_eq!(m, meta);
        assert_eq!(g.unwrap(), gt);
        assert_eq!(back.data().dim(), lf.data().dim());
        for (a, b) in lf.data().iter().zip(back.data().iter()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn single_view_scene() {
        let dir = tempfile::tempdir().unwrap();
        let lf = tiny_field(1, 1);
        let meta = SceneMeta::new("one", 50.0, 1.0, -1.0, 1.0).unwrap();
        save_scene(dir.path(), &lf, &meta, None).unwrap();
        let cfg = SceneConfig::read(dir.path().join(CONFIG_FILE)).unwrap();
        let (back, _, gt) = load_lightfield(&cfg).unwrap();
        assert_eq!((back.n_u(), back.n_v()), (1, 1));
        assert!(gt.is_none());
    }

    #[test]
    fn missing_view_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let lf = tiny_field(9, 9);
        let meta = SceneMeta::new("t", 50.0, 1.0, -1.0, 1.0).unwrap();
        let cfg = save_scene(dir.path(), &lf, &meta, None).unwrap();
        fs::remove_file(cfg.view_path(37)).unwrap();
        match load_lightfield(&cfg) {
            Err(Error::MissingView { index, .. }) => assert_eq!(index, 37),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_view_size() {
        let dir = tempfile::tempdir().unwrap();
        let lf = tiny_field(2, 1);
        let meta = SceneMeta::new("t", 50.0, 1.0, -1.0, 1.0).unwrap();
        let cfg = save_scene(dir.path(), &lf, &meta, None).unwrap();
        write_view_png(&Array3::zeros((3, 3, 1)), cfg.view_path(1)).unwrap();
        assert!(matches!(
            load_lightfield(&cfg),
            Err(Error::ViewShape { index: 1, .. })
        ));
    }
}
