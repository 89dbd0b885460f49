//! Run files and their merge with command-line flags.

use annuli::metric::MetricSpec;
use annuli::nitsche::{AnnulusGeometry, TargetAnnulus};
use annuli::{QuadratureConfig, RadialMetric, RootConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::args::{Common, Format};
use crate::CliError;

/// Keys accepted in a `--config` file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub metric: Option<MetricSpec>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub map: Option<String>,
    pub sweep: Option<String>,
    pub n: Option<u64>,
    pub n_list: Option<Vec<u64>>,
    pub seed: Option<u64>,
    pub mesh: Option<String>,
    pub n_maps: Option<usize>,
    pub n_nodes: Option<usize>,
    pub iters: Option<usize>,
    pub at: Option<Vec<f64>>,
    pub grid: Option<String>,
    pub profile: Option<PathBuf>,
    pub inverse: Option<bool>,
    pub dump_profile: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Loads `--config` if given and lays the shared flags over it.
    pub fn resolve(common: &Common) -> Result<Self, CliError> {
        let mut cfg = match &common.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(name) = &common.metric {
            cfg.metric = Some(MetricSpec::named(name, &common.params));
        } else if !common.params.is_empty() {
            match cfg.metric.as_mut() {
                Some(spec) => spec.params = common.params.clone(),
                None => return Err(CliError::Usage("--params needs a metric".into())),
            }
        }
        override_with(&mut cfg.tau, common.tau);
        override_with(&mut cfg.sigma, common.sigma);
        override_with(&mut cfg.r, common.r);
        override_with(&mut cfg.rel_tol, common.rel_tol);
        override_with(&mut cfg.abs_tol, common.abs_tol);
        override_with(&mut cfg.format, common.format);
        override_with(&mut cfg.out, common.out.clone());
        Ok(cfg)
    }

    pub fn metric(&self) -> Result<RadialMetric, CliError> {
        let spec = self
            .metric
            .as_ref()
            .ok_or_else(|| CliError::Usage("missing --metric".into()))?;
        Ok(spec.build()?)
    }

    pub fn tau(&self) -> Result<f64, CliError> {
        self.tau.ok_or_else(|| missing("tau"))
    }

    pub fn sigma(&self) -> Result<f64, CliError> {
        self.sigma.ok_or_else(|| missing("sigma"))
    }

    pub fn r(&self) -> Result<f64, CliError> {
        self.r.ok_or_else(|| missing("r"))
    }

    pub fn target(&self) -> Result<TargetAnnulus, CliError> {
        Ok(TargetAnnulus::new(self.tau()?, self.sigma()?)?)
    }

    pub fn geometry(&self) -> Result<AnnulusGeometry, CliError> {
        Ok(AnnulusGeometry::new(self.tau()?, self.sigma()?, self.r()?)?)
    }

    pub fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        let d = QuadratureConfig::default();
        let q = d.with_tolerances(self.rel_tol.unwrap_or(d.rel_tol), self.abs_tol.unwrap_or(d.abs_tol));
        q.validate()?;
        Ok(q)
    }

    pub fn root(&self) -> RootConfig {
        RootConfig::default()
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }
}

pub fn override_with<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn missing(key: &str) -> CliError {
    CliError::Usage(format!("missing --{key} (or `{key}` in the config file)"))
}

/// `lo:hi:step` (sweep) or `lo:hi:n` (grid) triples.
pub fn parse_triple(text: &str) -> Result<(f64, f64, f64), CliError> {
    let bad = || CliError::Usage(format!("expected lo:hi:step, got `{text}`"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"metric": {"name": "spherical"}, "tau": 0.5, "sigma": 0.9, "r": 0.6}"#,
        )
        .unwrap();
        let common = Common {
            config: Some(path),
            r: Some(0.7),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&common).unwrap();
        assert_eq!(cfg.r, Some(0.7));
        assert_eq!(cfg.tau, Some(0.5));
        assert_eq!(cfg.metric().unwrap().name(), "spherical");
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"tau": 0.5, "colour": "red"}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Usage(_))));
    }

    #[test]
    fn triples() {
        assert_eq!(parse_triple("0.1:0.5:0.1").unwrap(), (0.1, 0.5, 0.1));
        assert!(parse_triple("0.1:0.5").is_err());
    }
}
