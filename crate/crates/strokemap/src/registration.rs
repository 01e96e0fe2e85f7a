//! Six-parameter rigid registration via multi-resolution pattern search.
//!
//! The optimizer is deterministic: a coarse-to-fine mean-pooled pyramid,
//! a translation grid search at the coarsest level to escape poor
//! initializations, then greedy coordinate sweeps (Hooke–Jeeves style) with
//! step halving at every level. No gradients, no randomness — identical
//! inputs always produce bitwise-identical results.
//!
//! Costs are evaluated by pulling the moving volume onto the fixed grid with
//! trilinear interpolation, whose piecewise-smooth cost surface is what makes
//! the halving pattern search converge. Candidate transforms whose cost is
//! degenerate (e.g. the probe slid off the overlap) are treated as infinitely
//! bad rather than fatal; only a degenerate *initial* evaluation aborts.

use crate::affine::Affine;
use crate::resample::sample_trilinear_flag;
use crate::transform::RigidTransform;
use crate::volume::Volume3D;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostFunction {
    /// `1 - |Pearson r|` over the overlap: 0 is a perfect linear
    /// relationship, 1 is none. Insensitive to affine intensity changes.
    NormalizedCorrelation,
    /// Mean squared intensity difference over all fixed voxels
    /// (out-of-overlap voxels compare against zero fill).
    MeanSquares,
}

impl CostFunction {
    pub fn name(self) -> &'static str {
        match self {
            CostFunction::NormalizedCorrelation => "normalized-correlation",
            CostFunction::MeanSquares => "mean-squares",
        }
    }
}

impl std::fmt::Display for CostFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CostFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized-correlation" | "ncc" => Ok(CostFunction::NormalizedCorrelation),
            "mean-squares" | "mse" => Ok(CostFunction::MeanSquares),
            other => Err(Error::InvalidParameter(format!(
                "unknown cost function {other:?} (expected normalized-correlation or mean-squares)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RegistrationConfig {
    pub cost: CostFunction,
    /// Requested pyramid depth; silently reduced so the coarsest level keeps
    /// at least 8 voxels per axis.
    pub pyramid_levels: usize,
    /// Pattern-search sweep budget per level.
    pub max_iterations: usize,
    /// A sweep improving the cost by less than this triggers step halving;
    /// once steps bottom out, the level is converged.
    pub convergence_tol: f64,
    pub initial: RigidTransform,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig {
            cost: CostFunction::NormalizedCorrelation,
            pyramid_levels: 3,
            max_iterations: 100,
            convergence_tol: 1e-6,
            initial: RigidTransform::identity(),
        }
    }
}

/// Cost bookkeeping for one pyramid level.
#[derive(Debug, Clone, Copy)]
pub struct LevelTrace {
    /// 0 is full resolution; higher is coarser.
    pub level: usize,
    pub start_cost: f64,
    pub end_cost: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub transform: RigidTransform,
    /// Cost of `transform` on the full-resolution volumes.
    pub final_cost: f64,
    /// Sweep counts in processing order (coarsest level first).
    pub iterations_used: Vec<usize>,
    /// True when the finest level settled (steps at their floor, improvement
    /// below tolerance) *and* the optimizer actually improved on the initial
    /// transform. A run that never improved reports false.
    pub converged: bool,
    /// Per-level traces in processing order (coarsest first).
    pub levels: Vec<LevelTrace>,
}

/// Evaluate a cost function for `t` mapping `moving`-world into
/// `fixed`-world, rotating about the moving volume's bbox centroid.
pub fn registration_cost(
    fixed: &Volume3D,
    moving: &Volume3D,
    t: &RigidTransform,
    cost: CostFunction,
) -> Result<f64> {
    cost_about_center(fixed, moving, t, cost, moving.world_center())
}

fn cost_about_center(
    fixed: &Volume3D,
    moving: &Volume3D,
    t: &RigidTransform,
    cost: CostFunction,
    center: [f64; 3],
) -> Result<f64> {
    let world = t.to_matrix(center);
    let vox_map = moving
        .affine()
        .try_inverse()?
        .mul(&world.try_inverse()?)
        .mul(fixed.affine());

    let [nx, ny, nz] = fixed.extents();
    let total = fixed.num_voxels();
    let mut sum_sq = 0.0;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(total);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let c = vox_map.apply([x as f64, y as f64, z as f64]);
                let (mv, inside) = sample_trilinear_flag(moving, c);
                let fv = fixed.at(x, y, z);
                let d = fv - mv;
                sum_sq += d * d;
                if inside {
                    pairs.push((fv, mv));
                }
            }
        }
    }

    // Overlap sanity applies to both costs: a cost computed over (or next
    // to) a sliver of overlap is meaningless for either metric.
    if pairs.len() * 10 < total {
        return Err(Error::DegenerateOverlap(format!(
            "only {} of {} fixed voxels see the moving volume",
            pairs.len(),
            total
        )));
    }
    let n = pairs.len() as f64;
    let (sum_f, sum_m) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(f, m)| (a + f, b + m));
    let (mean_f, mean_m) = (sum_f / n, sum_m / n);
    let (mut var_f, mut var_m, mut cov) = (0.0, 0.0, 0.0);
    for &(f, m) in &pairs {
        let (df, dm) = (f - mean_f, m - mean_m);
        var_f += df * df;
        var_m += dm * dm;
        cov += df * dm;
    }
    if var_f == 0.0 {
        return Err(Error::DegenerateOverlap(
            "fixed image is constant over the overlap".into(),
        ));
    }
    if var_m == 0.0 {
        return Err(Error::DegenerateOverlap(
            "moving image is constant over the overlap".into(),
        ));
    }

    Ok(match cost {
        CostFunction::MeanSquares => sum_sq / total as f64,
        CostFunction::NormalizedCorrelation => {
            let r = cov / (var_f * var_m).sqrt();
            1.0 - r.abs()
        }
    })
}

/// Mean-pool by two along each axis (edge blocks may be single voxels).
/// The affine is rescaled so world positions are preserved: new voxel `i`
/// covers old voxels `2i..2i+2`, centred at old coordinate `2i + 0.5`.
pub fn downsample_by_two(v: &Volume3D) -> Volume3D {
    let [nx, ny, nz] = v.extents();
    let ne = [nx.div_ceil(2), ny.div_ceil(2), nz.div_ceil(2)];
    let mut data = Vec::with_capacity(ne[0] * ne[1] * ne[2]);
    for z in 0..ne[2] {
        for y in 0..ne[1] {
            for x in 0..ne[0] {
                let (x0, y0, z0) = (2 * x, 2 * y, 2 * z);
                let (x1, y1, z1) = ((x0 + 2).min(nx), (y0 + 2).min(ny), (z0 + 2).min(nz));
                let mut sum = 0.0;
                let mut count = 0usize;
                for zz in z0..z1 {
                    for yy in y0..y1 {
                        for xx in x0..x1 {
                            sum += v.at(xx, yy, zz);
                            count += 1;
                        }
                    }
                }
                data.push(sum / count as f64);
            }
        }
    }
    let lin = v.affine().linear_part();
    let mut lin2 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            lin2[i][j] = 2.0 * lin[i][j];
        }
    }
    let t = v.affine().apply([0.5, 0.5, 0.5]);
    let affine = Affine::from_linear_translation(lin2, t);
    Volume3D::new(ne, affine, data).expect("downsampled grid is valid by construction")
}

fn ceil_halved(extents: [usize; 3], times: usize) -> [usize; 3] {
    let mut e = extents;
    for _ in 0..times {
        e = [e[0].div_ceil(2), e[1].div_ceil(2), e[2].div_ceil(2)];
    }
    e
}

/// Deepest usable pyramid within `requested` levels: the coarsest level must
/// keep every axis of both volumes at 8 voxels or more.
fn usable_levels(
    fixed: [usize; 3],
    moving: [usize; 3],
    requested: usize,
) -> Result<usize> {
    for levels in (1..=requested).rev() {
        let fe = ceil_halved(fixed, levels - 1);
        let me = ceil_halved(moving, levels - 1);
        if fe.iter().chain(me.iter()).all(|&n| n >= 8) {
            return Ok(levels);
        }
    }
    let offender = if fixed.iter().any(|&n| n < 8) {
        fixed
    } else {
        moving
    };
    Err(Error::VolumeTooSmall(offender))
}

fn perturbed(t: &RigidTransform, param: usize, delta: f64) -> RigidTransform {
    let mut out = *t;
    if param < 3 {
        out.translations[param] += delta;
    } else {
        out.rotations[param - 3] += delta;
    }
    out
}

const GRID_OFFSETS: [f64; 5] = [-8.0, -4.0, 0.0, 4.0, 8.0];
/// Translation step floor: 1/20 voxel at the level being optimized.
const MIN_STEP_VOXELS: f64 = 0.05;
/// Rotation step floor in radians (~0.06 degrees).
const MIN_STEP_RAD: f64 = 1e-3;

pub fn register_rigid(
    fixed: &Volume3D,
    moving: &Volume3D,
    cfg: &RegistrationConfig,
) -> Result<RegistrationResult> {
    if cfg.pyramid_levels == 0 {
        return Err(Error::InvalidParameter(
            "pyramid_levels must be at least 1".into(),
        ));
    }
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidParameter(
            "max_iterations must be at least 1".into(),
        ));
    }
    let levels = usable_levels(fixed.extents(), moving.extents(), cfg.pyramid_levels)?;

    let mut fixed_pyr = vec![fixed.clone()];
    let mut moving_pyr = vec![moving.clone()];
    for _ in 1..levels {
        fixed_pyr.push(downsample_by_two(fixed_pyr.last().unwrap()));
        moving_pyr.push(downsample_by_two(moving_pyr.last().unwrap()));
    }

    let center = moving.world_center();
    let initial = cfg.initial;
    let mut current = initial;
    let mut iterations_used = Vec::with_capacity(levels);
    let mut traces = Vec::with_capacity(levels);
    let mut finest_converged = false;
    let mut initial_cost_finest: Option<f64> = None;
    let mut final_cost = f64::INFINITY;

    for level in (0..levels).rev() {
        let f = &fixed_pyr[level];
        let m = &moving_pyr[level];
        let eval = |t: &RigidTransform| cost_about_center(f, m, t, cfg.cost, center);

        // Seed with the better of the warm start and the caller's initial
        // transform, so no level can regress below the initial guess.
        let mut seeds = vec![(current, eval(&current))];
        if current != initial {
            seeds.push((initial, eval(&initial)));
        }
        if level == 0 {
            initial_cost_finest = seeds
                .iter()
                .find(|(t, _)| *t == initial)
                .and_then(|(_, c)| c.as_ref().ok().copied());
        }
        let mut best: Option<(RigidTransform, f64)> = None;
        let mut first_err = None;
        for (t, c) in seeds {
            match c {
                Ok(c) => {
                    if best.is_none_or(|(_, bc)| c < bc) {
                        best = Some((t, c));
                    }
                }
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        let Some((mut best, mut best_cost)) = best else {
            return Err(first_err.expect("no seeds succeeded"));
        };
        let start_cost = best_cost;

        let sp = f.spacing();

        // Coarsest level: translation grid search to escape bad basins.
        if level == levels - 1 {
            let base = best;
            for dz in GRID_OFFSETS {
                for dy in GRID_OFFSETS {
                    for dx in GRID_OFFSETS {
                        if dx == 0.0 && dy == 0.0 && dz == 0.0 {
                            continue;
                        }
                        let mut cand = base;
                        cand.translations[0] += dx * sp[0];
                        cand.translations[1] += dy * sp[1];
                        cand.translations[2] += dz * sp[2];
                        if let Ok(c) = eval(&cand) {
                            if c < best_cost {
                                best = cand;
                                best_cost = c;
                            }
                        }
                    }
                }
            }
        }

        // Pattern search: one-voxel translation steps and a rotation step
        // that shrinks with resolution, both halved on stagnant sweeps.
        let mut step_t = sp;
        let mut step_r = 0.02 * (1 << level) as f64;
        let min_t = [
            sp[0] * MIN_STEP_VOXELS,
            sp[1] * MIN_STEP_VOXELS,
            sp[2] * MIN_STEP_VOXELS,
        ];
        let mut iterations = 0usize;
        let mut level_converged = false;
        while iterations < cfg.max_iterations {
            iterations += 1;
            let cost_before = best_cost;
            for p in 0..6 {
                let step = if p < 3 { step_t[p] } else { step_r };
                let plus = perturbed(&best, p, step);
                let mut moved = false;
                if let Ok(c) = eval(&plus) {
                    if c < best_cost {
                        best = plus;
                        best_cost = c;
                        moved = true;
                    }
                }
                if !moved {
                    let minus = perturbed(&best, p, -step);
                    if let Ok(c) = eval(&minus) {
                        if c < best_cost {
                            best = minus;
                            best_cost = c;
                        }
                    }
                }
            }
            if cost_before - best_cost < cfg.convergence_tol {
                let at_floor = step_t
                    .iter()
                    .zip(&min_t)
                    .all(|(s, m)| *s <= m * (1.0 + 1e-12))
                    && step_r <= MIN_STEP_RAD * (1.0 + 1e-12);
                if at_floor {
                    level_converged = true;
                    break;
                }
                for (s, m) in step_t.iter_mut().zip(&min_t) {
                    *s = (*s / 2.0).max(*m);
                }
                step_r = (step_r / 2.0).max(MIN_STEP_RAD);
            }
        }

        current = best;
        final_cost = best_cost;
        iterations_used.push(iterations);
        traces.push(LevelTrace {
            level,
            start_cost,
            end_cost: best_cost,
            iterations,
        });
        if level == 0 {
            finest_converged = level_converged;
        }
    }

    let improved = initial_cost_finest.is_none_or(|c0| final_cost < c0);
    Ok(RegistrationResult {
        transform: current,
        final_cost,
        iterations_used,
        converged: finest_converged && improved,
        levels: traces,
    })
}
