//! Raster measurements on an exchange cloud: measure disjointness of the
//! pieces, areas of cylinder images, the covering number of the torus, and
//! the factor and self-affinity identities.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exchange::{ExchangeCloud, FMap};
use crate::spectral::SpectralProfile;

/// Largest number of raster cells allocated for one grid.
const MAX_CELLS: usize = 1 << 26;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    /// Cells per axis of the piece raster (bins when the exchange is 1-D).
    pub resolution: usize,
    /// Cells per axis of the torus raster.
    pub torus_resolution: usize,
    pub overlap_max: f64,
    pub monotone_slack: f64,
    pub min_points_per_cell: f64,
    pub area_tol: f64,
    pub coverage_min: f64,
    pub modal_min: f64,
    pub z_area_tol: f64,
    pub cocycle_tol: f64,
    pub equidistribution_cells: usize,
    pub equidistribution_tol: f64,
    pub self_affine_samples: usize,
    pub self_affine_tol: f64,
    pub det_tol: f64,
    pub seed: u64,
}

impl VerifyConfig {
    /// Defaults for an exchange of dimension `dim`.
    pub fn for_dim(dim: usize) -> Self {
        let (resolution, torus_resolution) = match dim {
            1 => (1 << 16, 1 << 16),
            2 => (1024, 256),
            _ => (64, 32),
        };
        Self {
            resolution,
            torus_resolution,
            overlap_max: 0.01,
            monotone_slack: 0.002,
            min_points_per_cell: 2.0,
            area_tol: 0.02,
            coverage_min: 0.99,
            modal_min: 0.98,
            z_area_tol: 0.05,
            cocycle_tol: 1e-6,
            equidistribution_cells: 16,
            equidistribution_tol: 0.05,
            self_affine_samples: 10_000,
            self_affine_tol: 1e-6,
            det_tol: 1e-8,
            seed: 0,
        }
    }

    /// Sample size giving `min_points_per_cell` per cell with margin at
    /// twice the piece resolution.
    pub fn default_points(&self, dim: usize) -> usize {
        let cells = (2 * self.resolution).pow(dim as u32) as f64;
        (1.25 * self.min_points_per_cell * cells).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("resolution", self.resolution), ("torus resolution", self.torus_resolution)] {
            if r == 0 || !r.is_power_of_two() {
                return Err(Error::Config(format!("{name} must be a power of two, got {r}")));
            }
        }
        if self.equidistribution_cells == 0 || self.self_affine_samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Plain statement of the property measured.
    pub property: String,
    pub pass: bool,
    pub statistic: f64,
    pub tolerance: f64,
    pub detail: String,
    /// The statistic could not be measured at this sample size.
    pub inconclusive: bool,
}

impl CheckResult {
    fn new(name: &str, property: &str, pass: bool, statistic: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            property: property.into(),
            pass,
            statistic,
            tolerance,
            detail,
            inconclusive: false,
        }
    }

    fn failed(name: &str, property: &str, tolerance: f64, err: &Error) -> Self {
        let mut c = Self::new(name, property, false, f64::NAN, tolerance, err.to_string());
        c.inconclusive = err.is_inconclusive();
        c
    }
}

/// Uniform grid of `res^dim` cells over a box.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    pub res: usize,
    pub lo: Vec<f64>,
    pub width: Vec<f64>,
}

impl Grid {
    pub fn new(dim: usize, res: usize, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let cells = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(res));
        if cells.is_none_or(|c| c > MAX_CELLS) {
            return Err(Error::Config(format!("a {res}^{dim} raster is too large")));
        }
        let width = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| ((h - l) / res as f64).max(f64::MIN_POSITIVE))
            .collect();
        Ok(Self { dim, res, lo, width })
    }

    /// Grid over the bounding box of the points, padded by half a cell.
    pub fn bounding(coords: &[f64], dim: usize, res: usize) -> Result<Self> {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks(dim) {
            for r in 0..dim {
                lo[r] = lo[r].min(p[r]);
                hi[r] = hi[r].max(p[r]);
            }
        }
        for r in 0..dim {
            let pad = (hi[r] - lo[r]).max(1e-12) / (2 * (res - 1).max(1)) as f64;
            lo[r] -= pad;
            hi[r] += pad;
        }
        Self::new(dim, res, lo, hi)
    }

    pub fn unit_torus(dim: usize, res: usize) -> Result<Self> {
        Self::new(dim, res, vec![0.0; dim], vec![1.0; dim])
    }

    pub fn cells(&self) -> usize {
        self.res.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.width.iter().product()
    }

    pub fn index(&self, p: &[f64]) -> usize {
        let mut idx = 0;
        for r in (0..self.dim).rev() {
            let c = ((p[r] - self.lo[r]) / self.width[r]).floor();
            let c = (c.max(0.0) as usize).min(self.res - 1);
            idx = idx * self.res + c;
        }
        idx
    }
}

const NO_OWNER: u32 = u32::MAX;
const SHARED: u32 = u32::MAX - 1;

#[derive(Debug, Clone, Serialize)]
pub struct Occupancy {
    pub occupied: usize,
    pub shared: usize,
    pub points_per_cell: f64,
    pub overlap: f64,
    pub area: f64,
}

/// Cells claimed by each piece, and the fraction claimed by two or more.
pub fn occupancy(coords: &[f64], labels: &[u32], grid: &Grid) -> Occupancy {
    let mut owner = vec![NO_OWNER; grid.cells()];
    for (p, &l) in coords.chunks(grid.dim).zip(labels) {
        let o = &mut owner[grid.index(p)];
        if *o == NO_OWNER {
            *o = l;
        } else if *o != l {
            *o = SHARED;
        }
    }
    let occupied = owner.iter().filter(|&&o| o != NO_OWNER).count();
    let shared = owner.iter().filter(|&&o| o == SHARED).count();
    Occupancy {
        occupied,
        shared,
        points_per_cell: labels.len() as f64 / occupied.max(1) as f64,
        overlap: shared as f64 / occupied.max(1) as f64,
        area: occupied as f64 * grid.cell_volume(),
    }
}

/// Coordinates of the labelled points, without the trailing successor.
pub fn sampled(cloud: &ExchangeCloud) -> &[f64] {
    &cloud.coords[..cloud.len() * cloud.dim]
}

/// Overlap statistic at one resolution; errors when the raster is too
/// sparse to measure.
pub fn disjointness(coords: &[f64], labels: &[u32], dim: usize, res: usize, min_per_cell: f64) -> Result<Occupancy> {
    let grid = Grid::bounding(coords, dim, res)?;
    let occ = occupancy(coords, labels, &grid);
    if occ.points_per_cell < min_per_cell {
        return Err(Error::TooFewSamples(format!(
            "{:.2} points per occupied cell at resolution {res}",
            occ.points_per_cell
        )));
    }
    Ok(occ)
}

pub fn check_disjointness(cloud: &ExchangeCloud, cfg: &VerifyConfig) -> Vec<CheckResult> {
    const PROP: &str = "pieces are disjoint in measure";
    let coords = sampled(cloud);
    let base = disjointness(coords, &cloud.labels, cloud.dim, cfg.resolution, cfg.min_points_per_cell);
    let fine = disjointness(coords, &cloud.labels, cloud.dim, cfg.resolution * 2, cfg.min_points_per_cell);
    let mut out = Vec::new();
    match &base {
        Ok(o) => out.push(CheckResult::new(
            "disjointness",
            PROP,
            o.overlap < cfg.overlap_max,
            o.overlap,
            cfg.overlap_max,
            format!(
                "{} of {} cells shared at {}^{}, {:.2} points per cell",
                o.shared, o.occupied, cfg.resolution, cloud.dim, o.points_per_cell
            ),
        )),
        Err(e) => out.push(CheckResult::failed("disjointness", PROP, cfg.overlap_max, e)),
    }
    const MONO: &str = "overlap does not grow when the resolution doubles";
    match (&base, &fine) {
        (Ok(a), Ok(b)) => out.push(CheckResult::new(
            "disjointness_monotone",
            MONO,
            b.overlap <= a.overlap + cfg.monotone_slack,
            b.overlap - a.overlap,
            cfg.monotone_slack,
            format!("{:.5} at {} → {:.5} at {}", a.overlap, cfg.resolution, b.overlap, cfg.resolution * 2),
        )),
        (Err(e), _) | (_, Err(e)) => out.push(CheckResult::failed("disjointness_monotone", MONO, cfg.monotone_slack, e)),
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct AreaReport {
    pub ratios: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub max_error: f64,
    pub total_area: f64,
}

/// Occupied-cell area of `{F(j) : φ(y_j) = a}` relative to the whole cloud.
pub fn cylinder_areas(cloud: &ExchangeCloud, frequencies: &[f64], res: usize) -> Result<AreaReport> {
    let coords = sampled(cloud);
    let grid = Grid::bounding(coords, cloud.dim, res)?;
    let total = occupancy(coords, &vec![0; cloud.len()], &grid);
    let mut ratios = Vec::with_capacity(cloud.source_size);
    for a in 0..cloud.source_size as u32 {
        let mut seen = vec![false; grid.cells()];
        for (p, &l) in coords.chunks(cloud.dim).zip(&cloud.letters) {
            if l == a {
                seen[grid.index(p)] = true;
            }
        }
        let n = seen.iter().filter(|&&s| s).count();
        ratios.push(n as f64 / total.occupied.max(1) as f64);
    }
    let max_error = ratios
        .iter()
        .zip(frequencies)
        .map(|(r, f)| (r - f).abs())
        .fold(0.0, f64::max);
    Ok(AreaReport {
        ratios,
        frequencies: frequencies.to_vec(),
        max_error,
        total_area: total.area,
    })
}

pub fn check_area_proportionality(cloud: &ExchangeCloud, frequencies: &[f64], cfg: &VerifyConfig) -> (CheckResult, Option<AreaReport>) {
    const PROP: &str = "cylinder images have area proportional to letter frequency";
    match cylinder_areas(cloud, frequencies, cfg.resolution) {
        Ok(r) => (
            CheckResult::new(
                "area_proportionality",
                PROP,
                r.max_error < cfg.area_tol,
                r.max_error,
                cfg.area_tol,
                format!("ratios {:.4?} vs frequencies {:.4?}", r.ratios, r.frequencies),
            ),
            Some(r),
        ),
        Err(e) => (CheckResult::failed("area_proportionality", PROP, cfg.area_tol, &e), None),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusCover {
    pub coverage: f64,
    pub z: usize,
    pub modal_fraction: f64,
    /// Number of covered cells of each multiplicity.
    pub histogram: BTreeMap<usize, usize>,
    #[serde(skip)]
    pub multiplicity: Vec<u16>,
    pub res: usize,
}

/// Multiplicity of each torus cell: the number of distinct integer translates
/// of the cloud that reach it.
pub fn torus_cover(coords: &[f64], dim: usize, res: usize) -> Result<TorusCover> {
    let grid = Grid::unit_torus(dim, res)?;
    let mut pairs: Vec<(u32, i64)> = coords
        .chunks(dim)
        .map(|p| {
            let mut key = 0i64;
            let mut frac = [0.0f64; 8];
            for r in 0..dim {
                let fl = p[r].floor();
                key = key.wrapping_mul(1_000_003).wrapping_add(fl as i64);
                if r < 8 {
                    frac[r] = p[r] - fl;
                }
            }
            (grid.index(&frac[..dim.min(8)]) as u32, key)
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut multiplicity = vec![0u16; grid.cells()];
    for (c, _) in &pairs {
        multiplicity[*c as usize] = multiplicity[*c as usize].saturating_add(1);
    }
    let mut histogram = BTreeMap::new();
    for &m in &multiplicity {
        if m > 0 {
            *histogram.entry(m as usize).or_insert(0usize) += 1;
        }
    }
    let covered: usize = histogram.values().sum();
    let (z, modal) = histogram
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&z, &n)| (z, n))
        .unwrap_or((0, 0));
    Ok(TorusCover {
        coverage: covered as f64 / grid.cells() as f64,
        z,
        modal_fraction: modal as f64 / covered.max(1) as f64,
        histogram,
        multiplicity,
        res,
    })
}

pub fn check_torus_cover(coords: &[f64], dim: usize, total_area: Option<f64>, cfg: &VerifyConfig) -> (Vec<CheckResult>, Option<TorusCover>) {
    let tc = match torus_cover(coords, dim, cfg.torus_resolution) {
        Ok(t) => t,
        Err(e) => {
            return (
                vec![CheckResult::failed("torus_cover", "the torus projection is onto", cfg.coverage_min, &e)],
                None,
            )
        }
    };
    let mut out = vec![
        {
            let mut c = CheckResult::new(
                "torus_coverage",
                "the torus projection is onto",
                tc.coverage > cfg.coverage_min,
                tc.coverage,
                cfg.coverage_min,
                if tc.coverage > cfg.coverage_min {
                    format!("{:.4} of {}^{dim} cells", tc.coverage, tc.res)
                } else {
                    format!("{:.4} of {}^{dim} cells; sample more points", tc.coverage, tc.res)
                },
            );
            c.inconclusive = !c.pass;
            c
        },
        CheckResult::new(
            "torus_multiplicity",
            "fibres of the torus projection have a.e. constant size Z",
            tc.modal_fraction >= cfg.modal_min,
            tc.modal_fraction,
            cfg.modal_min,
            format!("Z = {}, multiplicity histogram {:?}", tc.z, tc.histogram),
        ),
    ];
    if let Some(area) = total_area {
        let z = tc.z as f64;
        let err = (area - z).abs();
        out.push(CheckResult::new(
            "torus_area",
            "the exchange domain has volume Z",
            err < cfg.z_area_tol * z,
            err / z.max(1.0),
            cfg.z_area_tol,
            format!("raster area {area:.4} vs Z = {}", tc.z),
        ));
    }
    (out, Some(tc))
}

fn torus_distance(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Sup over consecutive points of the distance on the torus between
/// `F(j+1)` and `F(j) + α`.
pub fn cocycle_deviation(coords: &[f64], dim: usize, alpha: &[f64]) -> f64 {
    let n = coords.len() / dim;
    (0..n.saturating_sub(1))
        .map(|j| {
            (0..dim)
                .map(|r| torus_distance(coords[(j + 1) * dim + r] - coords[j * dim + r] - alpha[r]))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Largest relative deviation from uniform of the cell counts of the torus
/// projection on a `cells^dim` grid.
pub fn equidistribution(coords: &[f64], dim: usize, cells: usize) -> Result<f64> {
    let grid = Grid::unit_torus(dim, cells)?;
    let mut counts = vec![0usize; grid.cells()];
    let mut frac = vec![0.0; dim];
    let n = coords.len() / dim;
    for p in coords.chunks(dim) {
        for r in 0..dim {
            frac[r] = p[r] - p[r].floor();
        }
        counts[grid.index(&frac)] += 1;
    }
    let expect = n as f64 / grid.cells() as f64;
    Ok(counts
        .iter()
        .map(|&c| (c as f64 / expect - 1.0).abs())
        .fold(0.0, f64::max))
}

pub fn check_factor_map(cloud: &ExchangeCloud, alpha: &[f64], cfg: &VerifyConfig) -> Vec<CheckResult> {
    let dev = cocycle_deviation(&cloud.coords, cloud.dim, alpha);
    let mut out = vec![CheckResult::new(
        "factor_cocycle",
        "F∘S = F + α on the torus",
        dev < cfg.cocycle_tol,
        dev,
        cfg.cocycle_tol,
        format!("over {} consecutive steps", cloud.len()),
    )];
    const PROP: &str = "the torus projection of the orbit is equidistributed";
    match equidistribution(sampled(cloud), cloud.dim, cfg.equidistribution_cells) {
        Ok(d) => out.push(CheckResult::new(
            "equidistribution",
            PROP,
            d < cfg.equidistribution_tol,
            d,
            cfg.equidistribution_tol,
            format!("{}^{} cells", cfg.equidistribution_cells, cloud.dim),
        )),
        Err(e) => out.push(CheckResult::failed("equidistribution", PROP, cfg.equidistribution_tol, &e)),
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfAffinity {
    pub pointwise: f64,
    /// Spread of `F(ξ-image) − NᵗF` inside atoms of level `m + 1`.
    pub atom_spread: f64,
    pub level: usize,
}

/// Compares `F(|ξ(y₀…y_{j-1})|)` with `NᵗF(j)` for `j < samples`.
pub fn self_affinity(fmap: &FMap, spectral: &SpectralProfile, samples: usize) -> Result<SelfAffinity> {
    let frame = fmap.frame();
    let level = spectral.power_m as usize + 1;
    let atoms = frame.with_level(level)?;
    let nt = fmap.nt();
    let dim = fmap.dim();
    let mut first: std::collections::HashMap<u128, Vec<f64>> = std::collections::HashMap::new();
    let mut pointwise: f64 = 0.0;
    let mut atom_spread: f64 = 0.0;
    for j in 0..samples as u64 {
        let addr = frame.address(j)?;
        let img = fmap.eval(frame.xi_image_position(&addr)?)?;
        let f = nalgebra::DVector::from_vec(fmap.eval(j)?);
        let nf = nt * f;
        let resid: Vec<f64> = (0..dim).map(|r| img[r] - nf[r]).collect();
        pointwise = pointwise.max(resid.iter().fold(0.0, |m, x| m.max(x.abs())));
        let id = atoms.atom_index(atoms.atom(&addr));
        let r0 = first.entry(id).or_insert_with(|| resid.clone());
        atom_spread = atom_spread.max(resid.iter().zip(r0.iter()).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
    }
    Ok(SelfAffinity {
        pointwise,
        atom_spread,
        level,
    })
}

pub fn check_self_affine(fmap: &FMap, spectral: &SpectralProfile, cfg: &VerifyConfig) -> Vec<CheckResult> {
    let mut out = Vec::new();
    match self_affinity(fmap, spectral, cfg.self_affine_samples) {
        Ok(s) => {
            out.push(CheckResult::new(
                "self_affine",
                "F∘ξ = NᵗF",
                s.pointwise < cfg.self_affine_tol,
                s.pointwise,
                cfg.self_affine_tol,
                format!("over {} positions", cfg.self_affine_samples),
            ));
            out.push(CheckResult::new(
                "self_affine_pieces",
                "F∘ξ − NᵗF is constant on tower atoms",
                s.atom_spread < cfg.self_affine_tol,
                s.atom_spread,
                cfg.self_affine_tol,
                format!("atoms of level {}", s.level),
            ));
        }
        Err(e) => out.push(CheckResult::failed("self_affine", "F∘ξ = NᵗF", cfg.self_affine_tol, &e)),
    }
    let det = spectral.n_matrix().determinant().abs();
    let err = (det * spectral.beta() - 1.0).abs();
    out.push(CheckResult::new(
        "det_n_beta",
        "|det N|·β = 1",
        err < cfg.det_tol,
        err,
        cfg.det_tol,
        format!("|det N| = {det:.12}, β = {:.12}", spectral.beta()),
    ));
    out
}

/// The cloud with its piece labels permuted at random.
pub fn shuffle_labels(cloud: &ExchangeCloud, seed: u64) -> ExchangeCloud {
    let mut out = cloud.clone();
    out.labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

/// The cloud followed by a copy translated along the first axis by a
/// half-integer large enough that the two copies do not meet, so every torus
/// cell is reached by twice as many integer translates.
pub fn doubled_coords(coords: &[f64], dim: usize) -> Vec<f64> {
    let (lo, hi) = coords
        .chunks(dim)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[0]), h.max(p[0])));
    let shift = (hi - lo).ceil() + 1.5;
    let mut out = coords.to_vec();
    out.extend(coords.chunks(dim).flat_map(|p| {
        let mut q = p.to_vec();
        q[0] += shift;
        q
    }));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub z_estimate: Option<usize>,
    pub c_estimate: Option<f64>,
    pub overlap: Option<f64>,
    pub area: Option<AreaReport>,
    #[serde(skip)]
    pub torus: Option<TorusCover>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Some check failed only because the sample was too small.
    pub fn inconclusive(&self) -> bool {
        self.checks.iter().any(|c| c.inconclusive)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every check on a cloud built from `fmap`.
pub fn verify(
    cloud: &ExchangeCloud,
    fmap: &FMap,
    spectral: &SpectralProfile,
    frequencies: &[f64],
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let ((disj, (area_check, area)), (factor, affine)) = rayon::join(
        || {
            rayon::join(
                || check_disjointness(cloud, cfg),
                || check_area_proportionality(cloud, frequencies, cfg),
            )
        },
        || {
            rayon::join(
                || check_factor_map(cloud, &cloud.alpha, cfg),
                || check_self_affine(fmap, spectral, cfg),
            )
        },
    );
    let overlap = disj.first().filter(|c| c.statistic.is_finite()).map(|c| c.statistic);
    checks.extend(disj);
    checks.push(area_check);
    let c_estimate = area.as_ref().map(|a| a.total_area);
    let (torus_checks, torus) = check_torus_cover(sampled(cloud), cloud.dim, c_estimate, cfg);
    checks.extend(torus_checks);
    checks.extend(factor);
    checks.extend(affine);
    Ok(VerificationReport {
        checks,
        z_estimate: torus.as_ref().map(|t| t.z),
        c_estimate,
        overlap,
        area,
        torus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing() {
        let g = Grid::unit_torus(2, 4).unwrap();
        assert_eq!(g.index(&[0.0, 0.0]), 0);
        assert_eq!(g.index(&[0.99, 0.0]), 3);
        assert_eq!(g.index(&[0.0, 0.3]), 4);
        assert_eq!(g.cells(), 16);
    }

    #[test]
    fn single_piece_has_no_overlap() {
        let coords: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.618_033_988_75).fract()).collect();
        let o = disjointness(&coords, &vec![0; 4000], 1, 256, 2.0).unwrap();
        assert_eq!(o.overlap, 0.0);
    }

    #[test]
    fn sparse_raster_is_an_error() {
        let coords = vec![0.0, 1.0];
        assert!(matches!(
            disjointness(&coords, &[0, 1], 1, 1024, 2.0),
            Err(Error::TooFewSamples(_))
        ));
    }

    #[test]
    fn rotation_covers_circle_once() {
        let a = 0.381_966_011_250_105;
        let coords: Vec<f64> = (0..200_000).map(|i| (i as f64 * a).fract() - 0.5).collect();
        let t = torus_cover(&coords, 1, 1 << 12).unwrap();
        assert_eq!(t.z, 1);
        assert!(t.coverage > 0.999);
        let t2 = torus_cover(&doubled_coords(&coords, 1), 1, 1 << 12).unwrap();
        assert_eq!(t2.z, 2);
        assert!(cocycle_deviation(&coords, 1, &[a]) < 1e-9);
        assert!(cocycle_deviation(&coords, 1, &[a + 1e-3]) > 1e-4);
        assert!(equidistribution(&coords, 1, 16).unwrap() < 0.01);
    }

    #[test]
    fn controls_fail_on_fibonacci_cloud() {
        use crate::pipeline::{build_exchange, PipelineConfig};
        let s = crate::presets::load("fibonacci").unwrap();
        let mut cfg = VerifyConfig::for_dim(1);
        cfg.resolution = 1 << 12;
        cfg.torus_resolution = 1 << 12;
        let pc = PipelineConfig {
            points: Some(40_000),
            ..Default::default()
        };
        let ex = build_exchange(&s, &pc, Some(&cfg)).unwrap();
        let shuffled = shuffle_labels(&ex.cloud, 3);
        assert!(!check_disjointness(&shuffled, &cfg)[0].pass);
        let bad: Vec<f64> = ex.cloud.alpha.iter().map(|a| a + 1e-3).collect();
        assert!(!check_factor_map(&ex.cloud, &bad, &cfg)[0].pass);
        let t = torus_cover(&doubled_coords(sampled(&ex.cloud), 1), 1, cfg.torus_resolution).unwrap();
        assert_eq!(t.z, 2);
    }
}
