//! Registry of named checks. Each check maps a resolved parameter set and a
//! seed to a worst-case residual.

use std::collections::BTreeMap;

use ellcomm_core::cf::{plucker_seeded_residual, tensor_family_residuals};
use ellcomm_core::elliptic::{
    casimir_diagonal_residual, fu_commutator_residual, hom_welldefined_residual, qnk_relation_residual, star,
    star_assoc_residual, star_commutator_sizes, QnkOrder,
};
use ellcomm_core::poisson::{classical_hamiltonians, fay_sampled_residual, jacobi_all_residual, psi2_pair_residual};
use ellcomm_core::sample::raw_draw;
use ellcomm_core::transfer::{
    determinant_consistency, sos_expected_reference, sos_vs_t_coefficient_ratio, transfer_commutator_residual,
    vandermonde_exp_affine_residual,
};
use ellcomm_core::{Complex64, SymThetaFun, ThetaContext, TransferFamily};

/// Range and default of one numeric parameter.
#[derive(Clone, Copy, Debug)]
pub struct ParamDef {
    pub name: &'static str,
    pub default: f64,
    pub min: f64,
    pub max: f64,
    pub integer: bool,
}

const fn int(name: &'static str, default: i64, min: i64, max: i64) -> ParamDef {
    ParamDef {
        name,
        default: default as f64,
        min: min as f64,
        max: max as f64,
        integer: true,
    }
}

const fn real(name: &'static str, default: f64, min: f64, max: f64) -> ParamDef {
    ParamDef {
        name,
        default,
        min,
        max,
        integer: false,
    }
}

/// Parameters every check accepts. `tolerance` defaults to the check's own.
const COMMON: &[ParamDef] = &[
    real("tau_re", 0.0, -0.5, 0.5),
    real("tau_im", 0.8, 0.3, 4.0),
    real("eta_re", 0.171717, -1.0, 1.0),
    real("eta_im", 0.0323, -1.0, 1.0),
];

/// Fully resolved parameters of one check invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    values: BTreeMap<String, f64>,
    integer: BTreeMap<String, bool>,
}

impl Params {
    pub fn get(&self, name: &str) -> f64 {
        self.values[name]
    }

    pub fn usize(&self, name: &str) -> usize {
        self.values[name] as usize
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn is_integer(&self, name: &str) -> bool {
        self.integer.get(name).copied().unwrap_or(false)
    }

    /// Context of order `n` from the `tau_*`/`eta_*` parameters.
    pub fn ctx(&self, n: usize) -> ellcomm_core::Result<ThetaContext> {
        let tau = Complex64::new(self.get("tau_re"), self.get("tau_im"));
        let eta = Complex64::new(self.get("eta_re"), self.get("eta_im"));
        ThetaContext::new(tau, eta, n)
    }
}

type Runner = fn(&Params, u64) -> ellcomm_core::Result<f64>;
type Validator = fn(&Params) -> Result<(), String>;

/// A registered check.
pub struct CheckDef {
    pub name: &'static str,
    pub summary: &'static str,
    pub tolerance: f64,
    /// Reported but never counted towards the exit code.
    pub experimental: bool,
    /// Default number of consecutive seeds, starting at the given seed.
    pub seeds: usize,
    pub params: &'static [ParamDef],
    validate: Option<Validator>,
    run: Runner,
}

impl CheckDef {
    fn all_params(&self) -> impl Iterator<Item = &ParamDef> {
        self.params.iter().chain(COMMON)
    }

    pub fn param_defs(&self) -> Vec<ParamDef> {
        let mut v: Vec<ParamDef> = self.all_params().copied().collect();
        v.push(int("seeds", self.seeds as i64, 1, 100));
        v.push(real("tolerance", self.tolerance, 0.0, f64::MAX));
        v
    }

    /// Fills defaults and enforces ranges.
    pub fn resolve(&self, given: &BTreeMap<String, f64>) -> Result<Params, String> {
        let defs = self.param_defs();
        if let Some(k) = given.keys().find(|k| !defs.iter().any(|d| d.name == k.as_str())) {
            return Err(format!("check `{}` has no parameter `{k}`", self.name));
        }
        let mut values = BTreeMap::new();
        let mut integer = BTreeMap::new();
        for d in &defs {
            let v = given.get(d.name).copied().unwrap_or(d.default);
            if !v.is_finite() || v < d.min || v > d.max {
                return Err(format!("`{}` = {v} is outside [{}, {}]", d.name, d.min, d.max));
            }
            if d.integer && v.fract() != 0.0 {
                return Err(format!("`{}` must be an integer", d.name));
            }
            values.insert(d.name.to_string(), v);
            integer.insert(d.name.to_string(), d.integer);
        }
        let p = Params { values, integer };
        if let Some(check) = self.validate {
            check(&p)?;
        }
        Ok(p)
    }

    /// Worst residual over one seed.
    pub fn run_seed(&self, p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
        (self.run)(p, seed)
    }
}

/// Two spectral parameters drawn from a stream separate from the sample points.
fn spectral_pair(seed: u64, ctx: &ThetaContext) -> (Complex64, Complex64) {
    let d = raw_draw(seed ^ 0x9e37_79b9_7f4a_7c15, 0, 2, ctx);
    (d[0], d[1])
}

fn theta_quasi(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    let ctx = p.ctx(n)?;
    let mut worst = 0.0f64;
    for i in 0..n {
        let f = SymThetaFun::basis(i, n, &ctx)?;
        worst = worst.max(f.quasi_periodicity_residual(p.usize("samples"), seed)?);
    }
    Ok(worst)
}

fn cf_commute(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let (family, triangle) = tensor_family_residuals(p.usize("n"), p.usize("k"), seed)?;
    Ok(family.max(triangle))
}

fn cf_validate(p: &Params) -> Result<(), String> {
    match p.usize("k").checked_pow(p.usize("n") as u32) {
        Some(d) if d <= 4096 => Ok(()),
        _ => Err("k^n must not exceed 4096".into()),
    }
}

fn plucker(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    plucker_seeded_residual(p.usize("order"), seed)
}

fn poisson_commute(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    classical_hamiltonians(n, p.usize("points"), seed, &p.ctx(n)?)
}

fn poisson_jacobi(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    jacobi_all_residual(n, p.usize("points"), seed, &p.ctx(n)?)
}

fn transfer_commute(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    let ctx = p.ctx(n)?;
    let (u, v) = spectral_pair(seed, &ctx);
    transfer_commutator_residual(&TransferFamily::vn(n, &ctx)?, u, v, seed)
}

fn transfer_determinant(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    let ctx = p.ctx(n)?;
    let (u, _) = spectral_pair(seed, &ctx);
    Ok(determinant_consistency(u, n, &ctx, seed)?.0)
}

fn vandermonde(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    vandermonde_exp_affine_residual(n, p.usize("pairs"), seed, &p.ctx(n)?)
}

fn star_basis(p: &Params) -> ellcomm_core::Result<Vec<SymThetaFun>> {
    let n = p.usize("n");
    let ctx = p.ctx(n)?;
    (0..n).map(|i| SymThetaFun::basis(i, n, &ctx)).collect()
}

fn star_assoc(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let b = star_basis(p)?;
    let n = b.len();
    let samples = p.usize("samples");
    let (f, g, h) = (&b[0], &b[1 % n], &b[n - 1]);
    let fg = star(f, g)?;
    let fgh = star(&fg, h)?;
    let mut worst = star_assoc_residual(f, g, h, samples, seed)?;
    for x in [&fg, &fgh] {
        worst = worst.max(x.symmetry_residual(samples, seed)?);
        worst = worst.max(x.quasi_periodicity_residual(samples, seed)?);
    }
    Ok(worst)
}

/// `|log₂(r/10)|` for the commutator ratio `r` between `η·10⁻²` and `η·10⁻³`;
/// linear vanishing in `η` gives `r = 10`.
fn star_flatness(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let b = star_basis(p)?;
    let sizes = star_commutator_sizes(&b[0], &b[1], &[1e-2, 1e-3], p.usize("samples"), seed)?;
    let ratio = sizes[0] / sizes[1];
    let dev = (ratio / 10.0).log2().abs();
    Ok(if dev.is_finite() { dev } else { f64::MAX })
}

/// Kernel-annihilation residual; a wrong rank counts as the rank defect.
fn hom_welldefined(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    let rep = hom_welldefined_residual(n, p.usize("p"), &p.ctx(n)?, seed)?;
    let defect = rep.rank.abs_diff(rep.expected_rank) as f64;
    Ok(rep.residual.max(defect))
}

fn qnk(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    let order = if p.get("reversed") != 0.0 {
        QnkOrder::Reversed
    } else {
        QnkOrder::AsPrinted
    };
    qnk_relation_residual(n, p.usize("i"), p.usize("j"), p.usize("p"), order, &p.ctx(n)?, seed)
}

fn psi2(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let ctx = p.ctx(2)?;
    let d = raw_draw(seed ^ 0x9e37_79b9_7f4a_7c15, 1, 4, &ctx);
    psi2_pair_residual(&d[..2], &d[2..], p.usize("points"), seed, &ctx)
}

fn casimir(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let m = p.usize("m");
    let ctx = p.ctx(2 * m)?;
    let a = casimir_diagonal_residual(0, m, p.usize("samples"), seed, &ctx)?;
    Ok(a.max(casimir_diagonal_residual(1, m, p.usize("samples"), seed, &ctx)?))
}

fn fu_commute(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let m = p.usize("m");
    let ctx = p.ctx(2 * m)?;
    let (u, v) = spectral_pair(seed, &ctx);
    let ab = raw_draw(seed ^ 0x9e37_79b9_7f4a_7c15, 2, 2, &ctx);
    fu_commutator_residual(u, v, m, ab[0], ab[1], p.usize("psi"), &ctx, seed)
}

fn fu_validate(p: &Params) -> Result<(), String> {
    if p.usize("psi") >= p.usize("m") + 5 {
        return Err("psi must be below m + 5".into());
    }
    Ok(())
}

fn btilde_layers(p: &Params) -> Vec<usize> {
    ["p1", "p2", "p3"].iter().map(|k| p.usize(k)).filter(|&x| x > 0).collect()
}

fn btilde_commute(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let layers = btilde_layers(p);
    let ctx = p.ctx(layers.len() + 1)?;
    let (u, v) = spectral_pair(seed, &ctx);
    transfer_commutator_residual(&TransferFamily::btilde(&layers, &ctx)?, u, v, seed)
}

fn btilde_validate(p: &Params) -> Result<(), String> {
    if p.usize("p3") > 0 && p.usize("p2") == 0 {
        return Err("p3 needs p2".into());
    }
    Ok(())
}

fn sos_commute(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    let ctx = p.ctx(n)?;
    let (u, v) = spectral_pair(seed, &ctx);
    transfer_commutator_residual(&TransferFamily::sos(n, &ctx)?, u, v, seed)
}

/// Spread of the coefficient ratio, and its distance from `−e^{−πinu}`.
fn sos_ratio(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    let n = p.usize("n");
    let ctx = p.ctx(n)?;
    let (u, _) = spectral_pair(seed, &ctx);
    let r = sos_vs_t_coefficient_ratio(u, n, p.usize("points"), seed, &ctx)?;
    let expected = sos_expected_reference(u, n);
    Ok(r.spread.max((r.reference - expected).norm() / expected.norm()))
}

fn fay(p: &Params, seed: u64) -> ellcomm_core::Result<f64> {
    fay_sampled_residual(p.usize("quadruples"), seed, &p.ctx(1)?)
}

macro_rules! check {
    ($name:expr, $summary:expr, $tol:expr, $seeds:expr, [$($param:expr),* $(,)?], $run:expr) => {
        check!($name, $summary, $tol, $seeds, [$($param),*], $run, None, false)
    };
    ($name:expr, $summary:expr, $tol:expr, $seeds:expr, [$($param:expr),* $(,)?], $run:expr, $validate:expr, $exp:expr) => {
        CheckDef {
            name: $name,
            summary: $summary,
            tolerance: $tol,
            experimental: $exp,
            seeds: $seeds,
            params: &[$($param),*],
            validate: $validate,
            run: $run,
        }
    };
}

pub static REGISTRY: &[CheckDef] = &[
    check!("theta-quasi", "quasi-periodicity of the order-n theta basis", 1e-10, 1,
        [int("n", 3, 1, 6), int("samples", 200, 1, 2000)], theta_quasi),
    check!("cf-commute", "Cartier-Foata commuting family and triangle relations on tensor blocks", 1e-9, 20,
        [int("n", 2, 1, 4), int("k", 2, 1, 8)], cf_commute, Some(cf_validate), false),
    check!("plucker", "Plücker identity for decomposable forms", 1e-10, 50,
        [int("order", 2, 2, 4)], plucker),
    check!("poisson-commute", "classical Hamiltonians Poisson-commute", 1e-9, 5,
        [int("n", 3, 2, 5), int("points", 20, 1, 200)], poisson_commute),
    check!("poisson-jacobi", "cyclic Jacobi-determinant identity for the classical family", 1e-9, 5,
        [int("n", 3, 2, 4), int("points", 20, 1, 200)], poisson_jacobi),
    check!("transfer-commute", "[T(u), T(v)] = 0 in V_n", 1e-8, 5,
        [int("n", 3, 2, 5)], transfer_commute),
    check!("transfer-determinant", "T(u) against its determinant form", 1e-8, 1,
        [int("n", 2, 2, 3)], transfer_determinant),
    check!("vandermonde", "theta Vandermonde ratio is an exponential of an affine function", 1e-10, 1,
        [int("n", 3, 1, 5), int("pairs", 20, 1, 200)], vandermonde),
    check!("star-assoc", "star product associativity, symmetry and quasi-periodicity", 1e-8, 1,
        [int("n", 3, 2, 4), int("samples", 10, 1, 200)], star_assoc),
    check!("star-flatness", "commutator of the star product vanishes linearly in eta", 1.0, 1,
        [int("n", 3, 3, 4), int("samples", 5, 1, 100)], star_flatness),
    check!("hom-welldefined", "bosonization annihilates the relations of the star algebra", 1e-7, 1,
        [int("n", 3, 2, 5), int("p", 2, 1, 3)], hom_welldefined),
    check!("qnk", "quadratic relation of the bosonized generators", 1e-8, 1,
        [int("n", 3, 2, 6), int("i", 0, 0, 5), int("j", 1, 0, 5), int("p", 1, 1, 3), int("reversed", 1, 0, 1)],
        qnk, None, true),
    check!("psi2", "classical bosonization brackets in b_{2,2}", 1e-9, 1,
        [int("points", 20, 1, 200)], psi2),
    check!("casimir", "Casimir elements vanish on the shifted diagonal", 1e-10, 1,
        [int("m", 2, 2, 4), int("samples", 20, 1, 200)], casimir),
    check!("fu-commute", "[f(u), f(v)] = 0 for the bosonized family", 1e-7, 3,
        [int("m", 2, 2, 4), int("psi", 0, 0, 8)], fu_commute, Some(fu_validate), false),
    check!("btilde-commute", "[T~(u), T~(v)] = 0 for layers p1, p2, p3 (0 = absent)", 1e-7, 3,
        [int("p1", 2, 1, 3), int("p2", 2, 0, 3), int("p3", 0, 0, 2)], btilde_commute, Some(btilde_validate), false),
    check!("sos-commute", "[T_aux(u), T_aux(v)] = 0 in the SOS algebra", 1e-8, 1,
        [int("n", 2, 2, 3)], sos_commute),
    check!("sos-ratio", "T_aux(-u) against T(u) up to gauge and a constant", 1e-8, 1,
        [int("n", 2, 2, 3), int("points", 10, 1, 200)], sos_ratio),
    check!("fay", "three-term Fay identity on seeded quadruples", 1e-10, 1,
        [int("quadruples", 100, 1, 10000)], fay),
];

pub fn find(name: &str) -> Option<&'static CheckDef> {
    REGISTRY.iter().find(|c| c.name == name)
}
