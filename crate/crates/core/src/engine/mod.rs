//! Stark Hamiltonians in the Zeeman manifold, their diagonalization over a
//! grid, and trap characterization.
//!
//! For a level with polarizabilities `(a0, a1, a2)` the light-shift
//! operator in a field `E+` is
//!
//! ```text
//! H = -a0 |E+|^2
//!     - a1 (i E- x E+) . F / F
//!     - a2 [3/2 ((E-.F)(E+.F) + (E+.F)(E-.F)) - F(F+1) |E+|^2] / (F(2F-1))
//! ```
//!
//! which reduces to the diagonal light shift of a pure pi field when `E+`
//! points along the quantization axis. Separate trap entries add at the
//! Hamiltonian level; the two members of a beam pair add at the field level.

pub(crate) mod persist;
mod properties;
mod spin;

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::angular::HalfInt;
use crate::atom::{AtomicSystem, StateSpec};
use crate::constants::{joule_to_mk, wavelength_to_omega};
use crate::fields::{Axis, FieldMap, GridAxes, TrapConfig};
use crate::polarizability::{polarizabilities, PolarizabilityOptions, PolarizabilitySet, DEFAULT_GUARD_BAND};
use crate::surfaces::{c3_coefficient, cp_potential, CasimirPolder, Material, Surface, CLAMP_DISTANCE};
use crate::{Error, Result};

pub use persist::RESULT_FORMAT_VERSION;
pub use properties::{potential_properties, trap_properties, TrapProperties};

use spin::{CMatrix, FieldInvariants, Frame, SpinOperators, PRODUCT_PAIRS};

/// Version tag mixed into result hashes.
pub const ENGINE_VERSION: &str = concat!("evatrap-engine/", env!("CARGO_PKG_VERSION"));

/// Adjacent-point eigenvector overlap below which a sheet crossing is flagged.
pub const CROSSING_OVERLAP: f64 = 0.5;

/// Light-shift operator of one hyperfine manifold, basis `m = -F..F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeemanHamiltonian {
    pub f: HalfInt,
    /// J
    pub matrix: nalgebra::DMatrix<Complex64>,
}

impl ZeemanHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest `|H - H^dagger|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.matrix - self.matrix.adjoint();
        d.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order with eigenvectors as matching columns.
    pub fn eigen(&self) -> (Vec<f64>, nalgebra::DMatrix<Complex64>) {
        sorted_eigen(self.matrix.clone())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }
}

fn sorted_eigen(matrix: CMatrix) -> (Vec<f64>, CMatrix) {
    let dim = matrix.nrows();
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Coefficients of the operator basis `{1, F_i, (F_i F_j + F_j F_i)/2}`.
#[derive(Debug, Clone, Copy, Default)]
struct OperatorCoefficients {
    identity: f64,
    vector: [f64; 3],
    products: [f64; 6],
}

impl OperatorCoefficients {
    fn add_light_shift(&mut self, pol: &PolarizabilitySet, inv: &FieldInvariants) {
        let f = pol.f.value();
        self.identity -= pol.scalar * inv.intensity;
        if pol.f.twice() > 0 && pol.vector != 0.0 {
            for k in 0..3 {
                self.vector[k] -= pol.vector / f * inv.ellipticity[k];
            }
        }
        if pol.f.twice() >= 2 && pol.tensor != 0.0 {
            let k = -pol.tensor / (f * (2.0 * f - 1.0));
            self.identity -= k * f * (f + 1.0) * inv.intensity;
            for (idx, (i, j)) in PRODUCT_PAIRS.iter().enumerate() {
                let multiplicity = if i == j { 1.0 } else { 2.0 };
                self.products[idx] += k * 1.5 * multiplicity * inv.tensor[idx];
            }
        }
    }

    fn assemble(&self, ops: &SpinOperators) -> CMatrix {
        let dim = ops.dim();
        let mut h = CMatrix::identity(dim, dim) * Complex64::new(self.identity, 0.0);
        for k in 0..3 {
            if self.vector[k] != 0.0 {
                h += &ops.components[k] * Complex64::new(self.vector[k], 0.0);
            }
        }
        for k in 0..6 {
            if self.products[k] != 0.0 {
                h += &ops.products[k] * Complex64::new(self.products[k], 0.0);
            }
        }
        h
    }
}

fn check_axis(axis: [f64; 3]) -> Result<()> {
    let norm = axis.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() < 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "quantization axis must be a unit vector, |n| = {norm}"
        )));
    }
    Ok(())
}

/// Light-shift Hamiltonian of one hyperfine manifold at a single point.
pub fn stark_hamiltonian(
    pol: &PolarizabilitySet,
    e_plus: &[Complex64; 3],
    quantization_axis: [f64; 3],
) -> Result<ZeemanHamiltonian> {
    check_axis(quantization_axis)?;
    let ops = SpinOperators::new(pol.f);
    let e = Frame::new(quantization_axis).rotate(*e_plus);
    let mut c = OperatorCoefficients::default();
    c.add_light_shift(pol, &FieldInvariants::of(&e));
    Ok(ZeemanHamiltonian {
        f: pol.f,
        matrix: c.assemble(&ops),
    })
}

/// Engine settings that do not change the physics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapOptions {
    /// Worker threads; `Some(1)` runs the serial path, `None` uses all cores.
    pub threads: Option<usize>,
    /// Keep per-point eigenvectors (memory grows as points x (2F+1)^2).
    pub store_eigenvectors: bool,
    /// Minimum detuning from any hyperfine resonance, rad/s.
    pub guard_band: f64,
}

impl Default for TrapOptions {
    fn default() -> Self {
        TrapOptions {
            threads: None,
            store_eigenvectors: false,
            guard_band: DEFAULT_GUARD_BAND,
        }
    }
}

#[derive(Debug, Clone)]
struct Member {
    field: Arc<FieldMap>,
    phase: Complex64,
}

#[derive(Debug, Clone)]
struct Source {
    wavelength: f64,
    members: Vec<Member>,
}

#[derive(Debug, Clone)]
struct LevelModel {
    state: StateSpec,
    ops: SpinOperators,
    /// One set per source.
    pols: Vec<PolarizabilitySet>,
    c3: Vec<f64>,
    cp: Vec<f64>,
}

/// Precomputed inputs of a trap: member fields at their reference powers,
/// polarizabilities per (level, wavelength) and Casimir-Polder energies.
/// Evaluating at new powers only rescales fields and re-diagonalizes.
#[derive(Debug, Clone)]
pub struct TrapModel {
    axes: GridAxes,
    frame: Frame,
    sources: Vec<Source>,
    levels: Vec<LevelModel>,
    mask: Vec<bool>,
    surface_distance: Vec<f64>,
    surfaces: Vec<Surface>,
    mass: f64,
    default_powers: Vec<f64>,
    options: TrapOptions,
}

impl TrapModel {
    /// `levels` empty means the state of interest of `system`.
    pub fn new(
        system: &AtomicSystem,
        config: &TrapConfig,
        surfaces: &[(Surface, Material)],
        levels: &[StateSpec],
        options: TrapOptions,
    ) -> Result<Self> {
        check_axis(config.quantization_axis)?;
        let axes = config.axes().clone();
        for entry in &config.entries {
            if entry.axes() != &axes {
                return Err(Error::GridMismatch("beams are sampled on different grids".into()));
            }
        }
        let sources: Vec<Source> = config
            .entries
            .iter()
            .map(|entry| Source {
                wavelength: entry.wavelength(),
                members: entry
                    .members()
                    .into_iter()
                    .map(|(beam, phase)| Member {
                        field: beam.field.clone(),
                        phase,
                    })
                    .collect(),
            })
            .collect();

        let state_list: Vec<StateSpec> = if levels.is_empty() {
            let (lvl, f) = system.state();
            let l = &system.levels[lvl];
            vec![StateSpec {
                n: l.n,
                l: l.l,
                j: l.j,
                f,
            }]
        } else {
            levels.to_vec()
        };

        let points: Vec<[f64; 3]> = (0..axes.len()).map(|i| axes.coordinates(i)).collect();
        let mut mask = vec![false; points.len()];
        let mut surface_distance = vec![f64::INFINITY; points.len()];
        for (surface, _) in surfaces {
            for (i, p) in points.iter().enumerate() {
                let d = surface.signed_distance(*p);
                surface_distance[i] = surface_distance[i].min(d);
                if d < CLAMP_DISTANCE {
                    mask[i] = true;
                }
            }
        }

        let pol_options = PolarizabilityOptions {
            guard_band: options.guard_band,
        };
        let mut level_models = Vec::with_capacity(state_list.len());
        for state in state_list {
            let (level, f) = system.resolve(state)?;
            let pols = sources
                .iter()
                .map(|s| polarizabilities(system, level, f, wavelength_to_omega(s.wavelength), pol_options))
                .collect::<Result<Vec<_>>>()?;
            let c3 = surfaces
                .iter()
                .map(|(_, material)| c3_coefficient(system, level, material))
                .collect::<Result<Vec<_>>>()?;
            let cp = points
                .iter()
                .map(|p| {
                    surfaces
                        .iter()
                        .zip(&c3)
                        .map(|((surface, _), &c)| match cp_potential(surface, c, *p) {
                            CasimirPolder::Inside => -c / CLAMP_DISTANCE.powi(3),
                            other => other.energy(),
                        })
                        .sum()
                })
                .collect();
            level_models.push(LevelModel {
                state,
                ops: SpinOperators::new(f),
                pols,
                c3,
                cp,
            });
        }

        Ok(TrapModel {
            axes,
            frame: Frame::new(config.quantization_axis),
            sources,
            levels: level_models,
            mask,
            surface_distance,
            surfaces: surfaces.iter().map(|(s, _)| s.clone()).collect(),
            mass: system.mass,
            default_powers: config.member_powers(),
            options,
        })
    }

    pub fn axes(&self) -> &GridAxes {
        &self.axes
    }

    pub fn states(&self) -> Vec<StateSpec> {
        self.levels.iter().map(|l| l.state).collect()
    }

    /// Member-beam powers of the configuration the model was built from.
    pub fn default_powers(&self) -> &[f64] {
        &self.default_powers
    }

    pub fn member_count(&self) -> usize {
        self.sources.iter().map(|s| s.members.len()).sum()
    }

    pub fn options(&self) -> TrapOptions {
        self.options
    }

    pub fn set_options(&mut self, options: TrapOptions) {
        self.options = options;
    }

    /// Polarizabilities of a requested level, one per source.
    pub fn polarizabilities(&self, level: usize) -> &[PolarizabilitySet] {
        &self.levels[level].pols
    }

    /// C3 coefficients of a requested level, one per surface.
    pub fn c3(&self, level: usize) -> &[f64] {
        &self.levels[level].c3
    }

    fn amplitudes(&self, member_powers: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        if member_powers.len() != self.member_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} beam powers, got {}",
                self.member_count(),
                member_powers.len()
            )));
        }
        if let Some(p) = member_powers.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidArgument(format!("beam power must be non-negative, got {p}")));
        }
        let mut it = member_powers.iter();
        Ok(self
            .sources
            .iter()
            .map(|s| {
                s.members
                    .iter()
                    .map(|m| m.phase * (it.next().unwrap() / m.field.p_ref).sqrt())
                    .collect()
            })
            .collect())
    }

    /// Field of each source at a grid point, in the quantization frame.
    fn source_fields(&self, point: usize, amps: &[Vec<Complex64>]) -> Vec<FieldInvariants> {
        self.sources
            .iter()
            .zip(amps)
            .map(|(s, a)| {
                let mut e = [Complex64::new(0.0, 0.0); 3];
                for (m, w) in s.members.iter().zip(a) {
                    let v = m.field.at(point);
                    for k in 0..3 {
                        e[k] += w * v[k];
                    }
                }
                FieldInvariants::of(&self.frame.rotate(e))
            })
            .collect()
    }

    fn hamiltonian(&self, level: usize, point: usize, fields: &[FieldInvariants]) -> CMatrix {
        let lm = &self.levels[level];
        let mut c = OperatorCoefficients::default();
        for (pol, inv) in lm.pols.iter().zip(fields) {
            c.add_light_shift(pol, inv);
        }
        c.identity += lm.cp[point];
        c.assemble(&lm.ops)
    }

    /// Total Hamiltonian of a requested level at a grid point.
    pub fn point_hamiltonian(&self, level: usize, point: usize, member_powers: &[f64]) -> Result<ZeemanHamiltonian> {
        self.check_indices(level, point)?;
        let amps = self.amplitudes(member_powers)?;
        let fields = self.source_fields(point, &amps);
        Ok(ZeemanHamiltonian {
            f: self.levels[level].ops.f,
            matrix: self.hamiltonian(level, point, &fields),
        })
    }

    fn check_indices(&self, level: usize, point: usize) -> Result<()> {
        if level >= self.levels.len() {
            return Err(Error::InvalidArgument(format!("level index {level} out of range")));
        }
        if point >= self.axes.len() {
            return Err(Error::InvalidArgument(format!("point index {point} outside the grid")));
        }
        Ok(())
    }

    /// Eigenstate decomposition of one sheet at one point, computed on demand.
    pub fn decomposition(
        &self,
        level: usize,
        point: usize,
        sheet: usize,
        member_powers: &[f64],
    ) -> Result<Decomposition> {
        if self.mask.get(point).copied().unwrap_or(false) {
            return Err(Error::InvalidArgument(format!("point {point} is masked")));
        }
        let h = self.point_hamiltonian(level, point, member_powers)?;
        let (values, vectors) = h.eigen();
        decompose(h.f, &values, &vectors, sheet)
    }

    /// Diagonalizes every grid point at the given member-beam powers.
    pub fn evaluate(&self, member_powers: &[f64]) -> Result<TrapResult> {
        let amps = self.amplitudes(member_powers)?;
        let dims: Vec<usize> = self.levels.iter().map(|l| l.ops.dim()).collect();
        let store = self.options.store_eigenvectors;
        let compute = |point: usize| -> PointOutput {
            let fields = self.source_fields(point, &amps);
            let mut values = Vec::with_capacity(dims.iter().sum());
            let mut vectors = Vec::new();
            for level in 0..self.levels.len() {
                let (v, vecs) = sorted_eigen(self.hamiltonian(level, point, &fields));
                values.extend(v);
                if store {
                    vectors.extend(vecs.iter().copied());
                }
            }
            PointOutput { values, vectors }
        };
        let n = self.axes.len();
        let outputs: Vec<PointOutput> = match self.options.threads {
            Some(1) => (0..n).map(compute).collect(),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                .install(|| (0..n).into_par_iter().map(compute).collect()),
            None => (0..n).into_par_iter().map(compute).collect(),
        };

        let mut levels = Vec::with_capacity(self.levels.len());
        let mut offset = 0;
        let mut vec_offset = 0;
        for (lm, &dim) in self.levels.iter().zip(&dims) {
            let mut sheets = vec![Vec::with_capacity(n); dim];
            for out in &outputs {
                for (s, sheet) in sheets.iter_mut().enumerate() {
                    sheet.push(out.values[offset + s]);
                }
            }
            let eigenvectors = store.then(|| {
                let mut all = Vec::with_capacity(n * dim * dim);
                for out in &outputs {
                    all.extend_from_slice(&out.vectors[vec_offset..vec_offset + dim * dim]);
                }
                all
            });
            offset += dim;
            vec_offset += dim * dim;
            levels.push(LevelResult {
                state: lm.state,
                sheets,
                eigenvectors,
            });
        }
        Ok(TrapResult {
            axes: self.axes.clone(),
            levels,
            mask: self.mask.clone(),
            surface_distance: self.surface_distance.clone(),
            surfaces: self.surfaces.clone(),
            mass: self.mass,
            member_powers: member_powers.to_vec(),
            hash: String::new(),
            config: None,
        })
    }
}

struct PointOutput {
    values: Vec<f64>,
    vectors: Vec<Complex64>,
}

/// Potentials of one requested level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub state: StateSpec,
    /// `sheets[k][point]`, J, ascending in `k` at every point.
    pub sheets: Vec<Vec<f64>>,
    /// Column-major `(2F+1) x (2F+1)` eigenvector matrices, point after point.
    pub eigenvectors: Option<Vec<Complex64>>,
}

impl LevelResult {
    pub fn dim(&self) -> usize {
        self.sheets.len()
    }

    pub fn sheet_mk(&self, sheet: usize) -> Vec<f64> {
        self.sheets[sheet].iter().map(|&u| joule_to_mk(u)).collect()
    }

    pub fn eigenvector_matrix(&self, point: usize) -> Option<nalgebra::DMatrix<Complex64>> {
        let dim = self.dim();
        self.eigenvectors.as_ref().map(|v| {
            let start = point * dim * dim;
            nalgebra::DMatrix::from_column_slice(dim, dim, &v[start..start + dim * dim])
        })
    }
}

/// Output of a trap computation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapResult {
    pub axes: GridAxes,
    pub levels: Vec<LevelResult>,
    /// Points inside or within the clamp distance of a surface.
    pub mask: Vec<bool>,
    /// Signed distance to the nearest surface, m; infinite without surfaces.
    pub surface_distance: Vec<f64>,
    pub surfaces: Vec<Surface>,
    pub mass: f64,
    pub member_powers: Vec<f64>,
    pub hash: String,
    /// Echo of the configuration document, when the result came from one.
    pub config: Option<serde_json::Value>,
}

impl TrapResult {
    pub fn level(&self, level: usize) -> Result<&LevelResult> {
        self.levels
            .get(level)
            .ok_or_else(|| Error::InvalidArgument(format!("level index {level} out of range")))
    }

    /// Points where a sheet's eigenvector changes character between
    /// neighbors along `axis` (overlap below [`CROSSING_OVERLAP`]).
    /// Degenerate pairs are skipped.
    pub fn crossings(&self, level: usize, sheet: usize, axis: Axis) -> Result<Vec<usize>> {
        let lr = self.level(level)?;
        if lr.eigenvectors.is_none() {
            return Err(Error::InvalidArgument("eigenvectors were not stored".into()));
        }
        if sheet >= lr.dim() {
            return Err(Error::InvalidArgument(format!("sheet {sheet} out of range")));
        }
        let mut flagged = Vec::new();
        for point in 0..self.axes.len() {
            let mut ijk = self.axes.unravel(point);
            if ijk[axis.index()] == 0 {
                continue;
            }
            ijk[axis.index()] -= 1;
            let prev = self.axes.index(ijk[0], ijk[1], ijk[2]);
            if self.mask[point] || self.mask[prev] {
                continue;
            }
            if is_degenerate(lr, point, sheet) || is_degenerate(lr, prev, sheet) {
                continue;
            }
            let a = lr.eigenvector_matrix(point).unwrap();
            let b = lr.eigenvector_matrix(prev).unwrap();
            let overlap = a.column(sheet).dotc(&b.column(sheet)).norm_sqr();
            if overlap < CROSSING_OVERLAP {
                flagged.push(point);
            }
        }
        Ok(flagged)
    }
}

fn degeneracy_tolerance(values: &[f64]) -> f64 {
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    1e-9 * scale + f64::MIN_POSITIVE
}

fn is_degenerate(lr: &LevelResult, point: usize, sheet: usize) -> bool {
    let values: Vec<f64> = lr.sheets.iter().map(|s| s[point]).collect();
    sheet_is_degenerate(&values, sheet)
}

fn sheet_is_degenerate(values: &[f64], sheet: usize) -> bool {
    let tol = degeneracy_tolerance(values);
    (sheet > 0 && (values[sheet] - values[sheet - 1]).abs() <= tol)
        || (sheet + 1 < values.len() && (values[sheet + 1] - values[sheet]).abs() <= tol)
}

/// Squared overlaps of an eigenstate with the unperturbed `|m_F>` states.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub amplitudes: Vec<(HalfInt, f64)>,
    /// True when the sheet shares its eigenvalue with a neighbor, so the
    /// decomposition depends on the solver's basis choice.
    pub degenerate: bool,
}

fn decompose(f: HalfInt, values: &[f64], vectors: &CMatrix, sheet: usize) -> Result<Decomposition> {
    if sheet >= values.len() {
        return Err(Error::InvalidArgument(format!(
            "sheet {sheet} out of range for a {}-level manifold",
            values.len()
        )));
    }
    let amplitudes = f
        .projections()
        .enumerate()
        .map(|(i, m)| (m, vectors[(i, sheet)].norm_sqr()))
        .collect();
    Ok(Decomposition {
        amplitudes,
        degenerate: sheet_is_degenerate(values, sheet),
    })
}

/// Decomposition of a stored eigenstate on the unperturbed `|m_F>` basis.
pub fn eigenstate_decomposition(
    result: &TrapResult,
    level: usize,
    point: usize,
    sheet: usize,
) -> Result<Decomposition> {
    let lr = result.level(level)?;
    if point >= result.axes.len() {
        return Err(Error::InvalidArgument(format!("point index {point} outside the grid")));
    }
    if result.mask[point] {
        return Err(Error::InvalidArgument(format!("point {point} is masked")));
    }
    let vectors = lr
        .eigenvector_matrix(point)
        .ok_or_else(|| Error::InvalidArgument("eigenvectors were not stored".into()))?;
    let values: Vec<f64> = lr.sheets.iter().map(|s| s[point]).collect();
    decompose(lr.state.f, &values, &vectors, sheet)
}

/// Builds the model and evaluates it at the powers stored in `config`.
pub fn compute_trap(
    system: &AtomicSystem,
    config: &TrapConfig,
    surfaces: &[(Surface, Material)],
    levels: &[StateSpec],
    options: TrapOptions,
) -> Result<TrapResult> {
    let model = TrapModel::new(system, config, surfaces, levels, options)?;
    model.evaluate(&config.member_powers())
}
