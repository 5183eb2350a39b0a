use std::path::{Path, PathBuf};

use crate::cohort::DeprivationThreshold;
use crate::geo::LatLon;
use crate::metrics::Variable;
use crate::par::Exec;
use crate::predict::{ClassifierKind, Hyperparams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{file}:{line}: expected `key = value`")]
    Syntax { file: String, line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("{0} does not exist")]
    PathMissing(PathBuf),
    #[error("reading {0}: {1}")]
    Unreadable(PathBuf, String),
}

pub const INPUT_FILES: [&str; 5] = ["venues.csv", "transitions.csv", "wards.geojson", "expenditure.csv", "imd.csv"];

/// Everything a run needs. Built from a `key = value` file and overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub venues: Option<PathBuf>,
    pub transitions: Option<PathBuf>,
    pub wards: Option<PathBuf>,
    pub expenditure: Option<PathBuf>,
    pub imd: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub centre: LatLon,
    /// Empty means every fiscal year found in the expenditure file.
    pub fiscal_years: Vec<String>,
    pub period_offset: i32,
    pub deprivation_threshold: DeprivationThreshold,
    pub anova_variables: Vec<Variable>,
    pub classifiers: Vec<ClassifierKind>,
    pub k: usize,
    pub seed: Option<u64>,
    pub subset_thresholds: Vec<u32>,
    pub params: Hyperparams,
    pub exec: Exec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            venues: None,
            transitions: None,
            wards: None,
            expenditure: None,
            imd: None,
            output_dir: None,
            centre: LatLon::new(51.5074, -0.1278),
            fiscal_years: Vec::new(),
            period_offset: 1,
            deprivation_threshold: DeprivationThreshold::MedianRank,
            anova_variables: vec![
                Variable::Vc,
                Variable::Vcd,
                Variable::N,
                Variable::Ic,
                Variable::Oc,
                Variable::Ior,
                Variable::Acc,
            ],
            classifiers: ClassifierKind::ALL.to_vec(),
            k: 10,
            seed: None,
            subset_thresholds: vec![0, 10, 20, 30, 40],
            params: Hyperparams::default(),
            exec: Exec::default(),
        }
    }
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).ok_or_else(|| ConfigError::BadValue { key: key.into(), message: format!("`{s}`") }))
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim().parse().map_err(|_| ConfigError::BadValue { key: key.into(), message: format!("`{v}` is not a number") })
}

fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue { key: key.into(), message: format!("`{v}` is not a boolean") }),
    }
}

impl RunConfig {
    /// Settings for a directory containing the five standard input files.
    pub fn for_input_dir(dir: &Path) -> Self {
        let mut c = RunConfig::default();
        c.set_input_dir(dir);
        c
    }

    pub fn set_input_dir(&mut self, dir: &Path) {
        let [v, t, w, e, i] = INPUT_FILES.map(|f| Some(dir.join(f)));
        (self.venues, self.transitions, self.wards, self.expenditure, self.imd) = (v, t, w, e, i);
    }

    /// Parses `key = value` lines; `#` starts a comment. Relative paths are
    /// resolved against `base`.
    pub fn parse(text: &str, file: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { file: file.into(), line: i + 1 })?;
            c.set_relative(k.trim(), v.trim(), base)?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable(path.to_path_buf(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, &path.display().to_string(), base)
    }

    /// Applies one setting; paths are taken as given.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.set_relative(key, value, Path::new(""))
    }

    fn set_relative(&mut self, key: &str, v: &str, base: &Path) -> Result<(), ConfigError> {
        let path = || Some(base.join(v));
        let bad = |message: String| ConfigError::BadValue { key: key.into(), message };
        match key {
            "input_dir" => self.set_input_dir(&base.join(v)),
            "venues" => self.venues = path(),
            "transitions" => self.transitions = path(),
            "wards" => self.wards = path(),
            "expenditure" => self.expenditure = path(),
            "imd" => self.imd = path(),
            "output_dir" => self.output_dir = path(),
            "centre" => {
                let parts = list(key, v, |s| s.parse::<f64>().ok())?;
                match parts[..] {
                    [lat, lon] if (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) => {
                        self.centre = LatLon::new(lat, lon)
                    }
                    _ => return Err(bad("expected `lat, lon`".into())),
                }
            }
            "fiscal_years" => self.fiscal_years = list(key, v, |s| Some(s.to_string()))?,
            "period_offset" => self.period_offset = num(key, v)?,
            "deprivation_threshold" => self.deprivation_threshold = v.parse().map_err(bad)?,
            "anova_variables" => self.anova_variables = list(key, v, Variable::parse)?,
            "classifiers" => self.classifiers = list(key, v, |s| s.parse().ok())?,
            "k" => self.k = num(key, v)?,
            "seed" => self.seed = Some(num(key, v)?),
            "subset_thresholds" => self.subset_thresholds = list(key, v, |s| s.parse().ok())?,
            "parallel" => self.exec = if flag(key, v)? { Exec::Parallel } else { Exec::Sequential },
            "nb_var_smoothing" => self.params.nb_var_smoothing = num(key, v)?,
            "lr_lambda" => self.params.lr_lambda = num(key, v)?,
            "lr_tol" => self.params.lr_tol = num(key, v)?,
            "lr_max_iter" => self.params.lr_max_iter = num(key, v)?,
            "tree_max_depth" => self.params.tree_max_depth = num(key, v)?,
            "tree_min_samples_leaf" => self.params.tree_min_samples_leaf = num(key, v)?,
            "forest_trees" => self.params.forest_trees = num(key, v)?,
            "forest_max_features" => {
                self.params.forest_max_features = if v == "auto" { None } else { Some(num(key, v)?) }
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<(), ConfigError> {
        for p in pairs {
            let (k, v) = p.split_once('=').ok_or(ConfigError::Syntax { file: "override".into(), line: 0 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// The five input paths, in the order of [`INPUT_FILES`].
    pub fn input_paths(&self) -> Result<[&Path; 5], ConfigError> {
        fn get<'a>(p: &'a Option<PathBuf>, name: &'static str) -> Result<&'a Path, ConfigError> {
            p.as_deref().ok_or(ConfigError::Missing(name))
        }
        Ok([
            get(&self.venues, "venues")?,
            get(&self.transitions, "transitions")?,
            get(&self.wards, "wards")?,
            get(&self.expenditure, "expenditure")?,
            get(&self.imd, "imd")?,
        ])
    }

    /// Checks a full run can start: required settings present and a seed
    /// set for the stochastic stages. Input existence is checked by
    /// [`RunConfig::check_inputs`] at the start of ingest.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_layout()?;
        self.validate_analysis()
    }

    /// Input and output locations only; enough for the deterministic stages.
    pub fn validate_layout(&self) -> Result<(), ConfigError> {
        self.input_paths()?;
        self.output_dir.as_ref().ok_or(ConfigError::Missing("output_dir"))?;
        Ok(())
    }

    pub fn check_inputs(&self) -> Result<(), ConfigError> {
        for p in self.input_paths()? {
            if !p.exists() {
                return Err(ConfigError::PathMissing(p.to_path_buf()));
            }
        }
        Ok(())
    }

    pub fn validate_analysis(&self) -> Result<(), ConfigError> {
        self.seed.ok_or(ConfigError::Missing("seed"))?;
        if self.k < 2 {
            return Err(ConfigError::BadValue { key: "k".into(), message: "need at least 2 folds".into() });
        }
        if self.classifiers.is_empty() {
            return Err(ConfigError::BadValue { key: "classifiers".into(), message: "empty list".into() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let text = "# run\ninput_dir = data\noutput_dir = out\nseed = 7\nclassifiers = naive_bayes, random_forest\n\
                    anova_variables = VC, ior\ncentre = 51.5, -0.1\nparallel = false\n";
        let mut c = RunConfig::parse(text, "run.cfg", Path::new("/base")).unwrap();
        assert_eq!(c.venues.as_deref(), Some(Path::new("/base/data/venues.csv")));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.classifiers, vec![ClassifierKind::NaiveBayes, ClassifierKind::RandomForest]);
        assert_eq!(c.anova_variables, vec![Variable::Vc, Variable::Ior]);
        assert_eq!(c.exec, Exec::Sequential);
        c.apply_overrides(["k=5", "imd = other.csv"]).unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.imd.as_deref(), Some(Path::new("other.csv")));
    }

    #[test]
    fn errors() {
        assert!(matches!(RunConfig::parse("nonsense", "f", Path::new("")), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse("colour = red", "f", Path::new("")), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::parse("k = many", "f", Path::new("")), Err(ConfigError::BadValue { .. })));
        assert!(matches!(RunConfig::default().validate(), Err(ConfigError::Missing("venues"))));
        let mut c = RunConfig::for_input_dir(Path::new("/definitely/not/here"));
        c.seed = Some(1);
        assert!(matches!(c.validate(), Err(ConfigError::Missing("output_dir"))));
        assert!(matches!(c.check_inputs(), Err(ConfigError::PathMissing(_))));
    }
}
