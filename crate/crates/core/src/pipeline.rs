//! Staged driver: properize, decompose, build the exchange cloud, verify.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exchange::{build_cloud, build_cloud_auto, ExchangeCloud, FMap, DEFAULT_EPSILON};
use crate::properize::{properize, properize_with, Properization};
use crate::spectral::{classify, frequencies, MatrixProfile, SpectralProfile};
use crate::tower::TowerFrame;
use crate::verify::{verify, VerificationReport, VerifyConfig};
use crate::word::Letter;
use crate::Substitution;

#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    /// Return-word prefix; the seed letter when `None`.
    #[serde(serialize_with = "ser_letters")]
    pub u: Option<Vec<Letter>>,
    pub level: Option<usize>,
    pub depth: Option<usize>,
    pub epsilon: f64,
    /// Orbit positions sampled; derived from the raster size when `None`.
    pub points: Option<usize>,
    /// Skip the unimodular Pisot precondition and rely on the hypothesis
    /// checks of the spectral stage alone.
    pub force: bool,
}

fn ser_letters<S: serde::Serializer>(u: &Option<Vec<Letter>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match u {
        Some(w) => s.collect_seq(w.iter().map(|a| a.0)),
        None => s.serialize_none(),
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            u: None,
            level: None,
            depth: None,
            epsilon: DEFAULT_EPSILON,
            points: None,
            force: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

impl Timings {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f();
        self.stages.push((stage.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|(_, t)| t).sum()
    }
}

/// Everything computed up to the exchange cloud.
#[derive(Debug, Clone)]
pub struct Exchange {
    pub source: Substitution,
    pub profile: MatrixProfile,
    pub properization: Properization,
    pub spectral: SpectralProfile,
    /// Frequencies of the source letters.
    pub frequencies: Vec<f64>,
    pub fmap: FMap,
    pub cloud: ExchangeCloud,
    pub timings: Timings,
}

/// Fails unless the source is a primitive unimodular Pisot substitution.
pub fn require_pisot(profile: &MatrixProfile) -> Result<()> {
    let f = profile.flags;
    if !f.primitive {
        return Err(Error::NotPrimitive);
    }
    if !f.pisot {
        return Err(Error::Hypothesis {
            item: "i",
            detail: "the substitution is not of Pisot type (pass --force to check the hypotheses directly)".into(),
        });
    }
    if !f.unimodular {
        return Err(Error::Hypothesis {
            item: "iii",
            detail: "the substitution is not unimodular (pass --force to check the hypotheses directly)".into(),
        });
    }
    Ok(())
}

pub fn properize_for(source: &Substitution, u: Option<&[Letter]>) -> Result<Properization> {
    match u {
        Some(u) => properize_with(source, u),
        None => properize(source),
    }
}

/// Runs every stage up to the exchange cloud, tagging errors with the stage.
pub fn build_exchange(source: &Substitution, cfg: &PipelineConfig, vcfg: Option<&VerifyConfig>) -> Result<Exchange> {
    let mut timings = Timings::default();
    let profile = timings.time("classify", || Ok(classify(source.incidence())))?;
    if !cfg.force {
        require_pisot(&profile).map_err(Error::at("classify"))?;
    }
    let properization = timings
        .time("properize", || properize_for(source, cfg.u.as_deref()))
        .map_err(Error::at("properize"))?;
    let xi = &properization.proper_sub;
    let (spectral, freq) = timings
        .time("spectral", || {
            let sp = SpectralProfile::compute(source, xi, Some(&properization.phi))?;
            Ok((sp, frequencies(source.incidence())?))
        })
        .map_err(Error::at("spectral"))?;
    let fmap = timings
        .time("frame", || {
            let frame = TowerFrame::new(xi, 1)?;
            FMap::new(&frame, &spectral, cfg.depth, cfg.epsilon)
        })
        .map_err(Error::at("frame"))?;
    let dim = fmap.dim();
    let points = match cfg.points {
        Some(0) => return Err(Error::at("build")(Error::Config("points must be positive".into()))),
        Some(p) => p,
        None => vcfg.cloned().unwrap_or_else(|| VerifyConfig::for_dim(dim)).default_points(dim),
    };
    let cloud = timings
        .time("build", || match cfg.level {
            Some(n) => build_cloud(&fmap, n, &properization.phi, points),
            None => build_cloud_auto(&fmap, &properization.phi, points),
        })
        .map_err(Error::at("build"))?;
    Ok(Exchange {
        source: source.clone(),
        profile,
        properization,
        spectral,
        frequencies: freq,
        fmap,
        cloud,
        timings,
    })
}

impl Exchange {
    pub fn verify(&mut self, cfg: &VerifyConfig) -> Result<VerificationReport> {
        let Self {
            cloud,
            fmap,
            spectral,
            frequencies,
            timings,
            ..
        } = self;
        timings
            .time("verify", || verify(cloud, fmap, spectral, frequencies, cfg))
            .map_err(Error::at("verify"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn fibonacci_end_to_end() {
        let s = presets::load("fibonacci").unwrap();
        let mut vcfg = VerifyConfig::for_dim(1);
        vcfg.resolution = 1 << 12;
        vcfg.torus_resolution = 1 << 12;
        let cfg = PipelineConfig {
            points: Some(40_000),
            ..Default::default()
        };
        let mut ex = build_exchange(&s, &cfg, Some(&vcfg)).unwrap();
        assert_eq!(ex.cloud.dim, 1);
        let report = ex.verify(&vcfg).unwrap();
        assert!(report.all_pass(), "{:#?}", report.checks);
        assert_eq!(report.z_estimate, Some(1));
    }

    #[test]
    fn non_pisot_needs_force() {
        let s = presets::load("thue-morse").unwrap();
        let err = build_exchange(&s, &PipelineConfig::default(), None).unwrap_err();
        assert!(matches!(err.root(), Error::Hypothesis { .. }), "{err}");
        let forced = PipelineConfig {
            force: true,
            ..Default::default()
        };
        let err = build_exchange(&s, &forced, None).unwrap_err();
        assert!(matches!(err.root(), Error::Hypothesis { .. }), "{err}");
    }
}
