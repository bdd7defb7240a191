//! Subcommand arguments and their handlers.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use geninv_core::applied::{
    clipped_tanh_layer_pinv, haar_basis, relu_layer_pinv, tanh_layer_pinv, wavelet_threshold_roundtrip,
    LayerActivation, NeuralLayer, ThresholdKind,
};
use geninv_core::core_ops::{FiniteOperator, VectorOperatorSpec};
use geninv_core::endofunction::{check_drazin_axioms, drazin_inverse};
use geninv_core::numerics::{DenseMatrix, PrimeField};
use geninv_core::pseudo_inverse::{BasOracle, PinvValue, Scalar1DOperator};
use geninv_core::vanishing::{find_vanishing_poly, minimal_poly, FpVectorOperator};
use geninv_core::verify::run_suite;

use crate::io;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

impl Check {
    fn exact(name: &str, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            residual: if passed { 0.0 } else { 1.0 },
        }
    }

    fn within(name: &str, residual: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            passed: residual <= tol,
            residual,
        }
    }
}

/// Result of one subcommand: its payload and the checks run on it.
pub struct Report {
    command: &'static str,
    body: Map<String, Value>,
    checks: Vec<Value>,
    passed: bool,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Report {
            command,
            body: Map::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    fn put(&mut self, key: &str, v: impl Serialize) -> Result<()> {
        self.body.insert(key.into(), serde_json::to_value(v)?);
        Ok(())
    }

    fn check(&mut self, c: Check) -> Result<()> {
        self.passed &= c.passed;
        self.checks.push(serde_json::to_value(c)?);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.passed
    }

    pub fn to_json(&self) -> String {
        let mut out = self.body.clone();
        out.insert("command".into(), Value::from(self.command));
        out.insert("checks".into(), Value::Array(self.checks.clone()));
        out.insert("passed".into(), Value::from(self.passed));
        serde_json::to_string(&Value::Object(out)).expect("JSON values always serialize")
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScalarKind {
    Square,
    ShiftedSquare,
    Relu,
    Hard,
    Soft,
    Tanh,
    Sign,
    SignEps,
    Exp,
    Sine,
    Linear,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct Pinv1dArgs {
    #[arg(long, value_enum)]
    pub kind: ScalarKind,
    /// Threshold or shift parameter.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Slope of the linear kind.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub w: f64,
}

fn scalar_op(a: &Pinv1dArgs) -> Result<Scalar1DOperator> {
    let need = |x: Option<f64>, flag: &str| x.with_context(|| format!("--kind {:?} needs --{flag}", a.kind));
    let op = match a.kind {
        ScalarKind::Square => Scalar1DOperator::Square,
        ScalarKind::ShiftedSquare => Scalar1DOperator::ShiftedSquare { a: need(a.a, "a")? },
        ScalarKind::Relu => Scalar1DOperator::Relu,
        ScalarKind::Hard => Scalar1DOperator::HardThreshold { a: need(a.a, "a")? },
        ScalarKind::Soft => Scalar1DOperator::SoftThreshold { a: need(a.a, "a")? },
        ScalarKind::Tanh => Scalar1DOperator::Tanh,
        ScalarKind::Sign => Scalar1DOperator::Sign,
        ScalarKind::SignEps => Scalar1DOperator::SignEps { eps: need(a.eps, "eps")? },
        ScalarKind::Exp => Scalar1DOperator::Exp,
        ScalarKind::Sine => Scalar1DOperator::Sine,
        ScalarKind::Linear => Scalar1DOperator::Linear { c: need(a.c, "c")? },
    };
    op.validate()?;
    Ok(op)
}

pub fn pinv1d(a: &Pinv1dArgs) -> Result<Report> {
    if !a.w.is_finite() {
        bail!("--w must be finite");
    }
    let op = scalar_op(a)?;
    let mut r = Report::new("pinv1d");
    r.put("kind", op.name())?;
    r.put("w", a.w)?;
    let pv = op.pinv(a.w);
    match pv {
        PinvValue::Value(x) => {
            r.put("value", x)?;
            r.put("unique", true)?;
        }
        PinvValue::Nonunique(x) => {
            r.put("value", -x)?;
            r.put("values", [-x, x])?;
            r.put("unique", false)?;
        }
        PinvValue::Undefined => {
            r.put("value", Value::Null)?;
            r.put("defined", false)?;
        }
    }
    if let Some(g) = pv.representative() {
        // G T G = G at this point.
        let back = op.pinv(op.eval(g)).representative();
        let res = back.map_or(f64::INFINITY, |b| (b - g).abs());
        r.check(Check::within("mp2", res, 1e-9))?;
    }
    Ok(r)
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct OracleArgs {
    /// JSON operator description.
    #[arg(long)]
    pub op: PathBuf,
    /// Target: a CSV file or comma-separated numbers.
    #[arg(long)]
    pub w: String,
    /// Search box per coordinate, as `LO HI`.
    #[arg(long = "box", num_args = 2, value_names = ["LO", "HI"], default_values_t = [-10.0, 10.0])]
    pub bounds: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Residual tolerance for counting a candidate as tied.
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
}

pub fn oracle(a: &OracleArgs) -> Result<Report> {
    let spec: VectorOperatorSpec = io::read_json(&a.op)?;
    let op = spec.build().with_context(|| format!("{}: bad operator", a.op.display()))?;
    let w = io::read_vector(&a.w)?;
    let (lo, hi) = (a.bounds[0], a.bounds[1]);
    let oracle = BasOracle::grid(&op, &vec![(lo, hi); op.dim_in()], a.step)?;
    let ans = oracle.query(&w, a.slack)?;
    let mut r = Report::new("oracle");
    r.put("w", &w)?;
    r.put("grid_points", oracle.len())?;
    r.put("value", &ans.best)?;
    r.put("residual", ans.residual)?;
    r.put("norm", ans.norm)?;
    r.put("ties", &ans.ties)?;
    let tv = op.apply(&ans.best)?;
    let res = tv.iter().zip(&w).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    r.check(Check::within("residual_reproduced", (res - ans.residual).abs(), 1e-12))?;
    Ok(r)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct LayerArgs {
    /// JSON matrix `{"rows", "cols", "data"}`.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, value_enum)]
    pub act: Activation,
    /// Clip level `k` for a clipped tanh layer.
    #[arg(long)]
    pub clip: Option<u32>,
    #[arg(long)]
    pub w: String,
}

pub fn layer_pinv(a: &LayerArgs) -> Result<Report> {
    let weights: DenseMatrix = io::read_json(&a.weights)?;
    let act = match a.act {
        Activation::Relu => LayerActivation::Relu,
        Activation::Tanh => LayerActivation::Tanh,
    };
    let mut layer = NeuralLayer::new(weights, act)?;
    if let Some(k) = a.clip {
        layer = layer.with_clip(k)?;
    }
    let w = io::read_vector(&a.w)?;
    let g = |w: &[f64]| -> geninv_core::Result<Vec<f64>> {
        match (a.act, a.clip) {
            (Activation::Relu, _) => relu_layer_pinv(&layer, w),
            (Activation::Tanh, None) => tanh_layer_pinv(&layer, w),
            (Activation::Tanh, Some(_)) => clipped_tanh_layer_pinv(&layer, w),
        }
    };
    let v = g(&w)?;
    let tv = layer.forward(&v)?;
    let mut r = Report::new("layer-pinv");
    r.put("w", &w)?;
    r.put("value", &v)?;
    r.put("image", &tv)?;
    // T G T = T at v, and G T G = G at w.
    let tgtv = layer.forward(&g(&tv)?)?;
    r.check(Check::within("mp1", max_abs_diff(&tgtv, &tv), 1e-8))?;
    r.check(Check::within("mp2", max_abs_diff(&g(&tv)?, &v), 1e-8))?;
    Ok(r)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Basis {
    Haar,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Threshold {
    Hard,
    Soft,
}

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    #[arg(long, value_enum, default_value = "haar")]
    pub basis: Basis,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub kind: Threshold,
    #[arg(long)]
    pub a: f64,
    /// Headerless single-column CSV.
    #[arg(long)]
    pub signal: PathBuf,
    /// Where to write the denoised signal.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn denoise(a: &DenoiseArgs) -> Result<Report> {
    let basis = match a.basis {
        Basis::Haar => haar_basis(a.n)?,
    };
    let x = io::read_signal(&a.signal)?;
    if x.len() != a.n {
        bail!("{}: expected {} samples, found {}", a.signal.display(), a.n, x.len());
    }
    let kind = match a.kind {
        Threshold::Hard => ThresholdKind::Hard,
        Threshold::Soft => ThresholdKind::Soft,
    };
    let rt = wavelet_threshold_roundtrip(&basis, kind, a.a, &x)?;
    if let Some(out) = &a.out {
        io::write_signal(out, &rt.denoised)?;
    }
    let mut r = Report::new("denoise");
    r.put("denoised", &rt.denoised)?;
    r.put("roundtrip", &rt.roundtrip)?;
    r.put("difference", rt.difference)?;
    let again = wavelet_threshold_roundtrip(&basis, kind, a.a, &rt.denoised)?;
    match kind {
        ThresholdKind::Hard => {
            r.check(Check::within("roundtrip_identity", rt.difference, 1e-10))?;
            r.check(Check::within(
                "idempotence",
                max_abs_diff(&again.denoised, &rt.denoised),
                1e-10,
            ))?;
        }
        ThresholdKind::Soft => {
            if let Some(wit) = &rt.witness {
                r.put("witness_difference", wit.difference)?;
                r.check(Check {
                    name: "roundtrip_differs".into(),
                    passed: wit.difference >= 0.9 * a.a,
                    residual: wit.difference,
                })?;
            }
        }
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct DrazinArgs {
    /// JSON `{"domain", "codomain", "table"}` or a bare table array.
    #[arg(long)]
    pub op: PathBuf,
}

fn read_endofunction(path: &PathBuf) -> Result<FiniteOperator> {
    let v: Value = io::read_json(path)?;
    let t = match v {
        Value::Array(_) => {
            let table: Vec<usize> =
                serde_json::from_value(v).with_context(|| format!("{}: table must hold ids", path.display()))?;
            FiniteOperator::new(table.len(), table.len(), table)?
        }
        other => serde_json::from_value(other).with_context(|| format!("{}: bad operator", path.display()))?,
    };
    Ok(t)
}

pub fn drazin(a: &DrazinArgs) -> Result<Report> {
    let t = read_endofunction(&a.op)?;
    let d = drazin_inverse(&t)?;
    let mut r = Report::new("drazin");
    r.put("exists", d.exists)?;
    r.put("index", d.index)?;
    r.put("inverse_table", d.inverse.as_ref().map(|g| g.table().to_vec()))?;
    r.put("chain", &d.chain.sets)?;
    r.put("stabilization", d.chain.stabilization)?;
    if let (Some(g), Some(k)) = (&d.inverse, d.k) {
        let ax = check_drazin_axioms(&t, g, k)?;
        r.check(Check::exact("tk_g_t_equals_tk", ax.mp1k))?;
        r.check(Check::exact("g_t_g_equals_g", ax.mp2))?;
        r.check(Check::exact("commutes", ax.d5))?;
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct VanishArgs {
    /// JSON `{"prime", "dim", "table"}`, or an endofunction whose size is a
    /// power of `--prime`.
    #[arg(long)]
    pub op: PathBuf,
    #[arg(long)]
    pub prime: u64,
}

pub fn vanish(a: &VanishArgs) -> Result<Report> {
    let field = PrimeField::new(a.prime)?;
    let v: Value = io::read_json(&a.op)?;
    let t = if v.get("prime").is_some() {
        let t: FpVectorOperator =
            serde_json::from_value(v).with_context(|| format!("{}: bad operator", a.op.display()))?;
        if t.field() != field {
            bail!("{}: prime {} disagrees with --prime {}", a.op.display(), t.field().p(), a.prime);
        }
        t
    } else {
        FpVectorOperator::from_finite(field, &read_endofunction(&a.op)?)?
    };
    let van = find_vanishing_poly(&t, None)?;
    let min = minimal_poly(&t)?;
    let mut r = Report::new("vanish");
    r.put("vanishing", van.poly.coeffs())?;
    r.put("minimal", min.coeffs())?;
    r.put("degree_bound", van.degree_bound)?;
    r.put("l", van.l)?;
    r.put("m", van.m)?;
    r.check(Check::exact("vanishing_vanishes", t.vanishes(&van.poly)))?;
    r.check(Check::exact(
        "degree_within_bound",
        van.poly.degree().is_some_and(|d| d <= van.degree_bound),
    ))?;
    r.check(Check::exact("minimal_vanishes", t.vanishes(&min)))?;
    r.check(Check::exact("minimal_divides_vanishing", min.divides(&van.poly)))?;
    Ok(r)
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn verify_suite(a: &SuiteArgs) -> Result<Report> {
    let outcomes = run_suite(a.seed)?;
    let mut r = Report::new("verify-suite");
    r.put("seed", a.seed)?;
    for o in outcomes {
        r.passed &= o.passed;
        r.checks.push(json!({
            "name": o.name,
            "passed": o.passed,
            "cases": o.cases,
            "residual": o.worst,
            "detail": o.detail,
        }));
    }
    Ok(r)
}
