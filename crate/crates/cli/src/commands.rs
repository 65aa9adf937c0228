use std::path::{Path, PathBuf};

use clap::Args;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nlsnf::birkhoff::*;
use nlsnf::dynamics::{action_drift, composition_error_sweep, integrate, invariance_with, prepare, InvarianceConfig, NlsField, Scheme};
use nlsnf::hamcore::{Hamiltonian, NumericHamiltonian, State};
use nlsnf::kamlab::*;
use nlsnf::nlsham::*;
use nlsnf::seed::derived_rng;

use crate::config::{need, resolve};
use crate::CliError;

pub struct Ctx {
    pub file: Option<toml::Table>,
    pub out: Option<PathBuf>,
}

impl Ctx {
    fn args<T: Serialize + serde::de::DeserializeOwned>(&self, section: &str, flags: &T) -> Result<T, CliError> {
        resolve(self.file.as_ref(), section, flags)
    }

    /// `{"command", "config", "report"}`; keys come out sorted, with no timestamp.
    fn emit(&self, command: &str, config: &impl Serialize, report: Value) -> Result<(), CliError> {
        let doc = json!({
            "command": command,
            "config": without_nulls(serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?),
            "report": report,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        match &self.out {
            Some(p) => write(p, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn without_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        v => v,
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn value(v: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

/// `p/q`, an integer, or a plain decimal such as `0.01`.
fn rational(s: &str) -> Result<BigRational, CliError> {
    let s = s.trim();
    let bad = || CliError::Config(format!("`{s}` is not a rational number"));
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let scale = num::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(digits, scale));
    }
    s.parse().map_err(|_| bad())
}

fn model(derivatives: &Option<Vec<String>>, polynomial: Option<bool>) -> Result<NonlinearitySpec, CliError> {
    let ds: Vec<String> = match derivatives.as_deref() {
        None => vec!["1".into()],
        Some([one]) if one == "cubic" => vec!["1".into()],
        Some(ds) => ds.to_vec(),
    };
    Ok(NonlinearitySpec::parse(&ds, polynomial.unwrap_or(true))?)
}

/// A bare Hamiltonian file, or a report of `build-hamiltonian`/`normal-form`.
fn read_hamiltonian(path: &Path) -> Result<Hamiltonian, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(h) = Hamiltonian::from_json(&text) {
        return Ok(h);
    }
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for ptr in ["/report/hamiltonian", "/report/normalForm"] {
        if let Some(h) = v.pointer(ptr) {
            return serde_json::from_value(h.clone()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
        }
    }
    Err(CliError::Config(format!("{} holds no Hamiltonian", path.display())))
}

// ---- build-hamiltonian ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct BuildArgs {
    /// f^(m)(0) for m = 1, 2, … as rationals, or `cubic`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub derivatives: Option<Vec<String>>,
    /// f is a polynomial (missing derivatives are zero) [default: true]
    #[arg(long)]
    pub polynomial: Option<bool>,
    /// Fourier cutoff.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<i32>,
    /// Keep terms up to degree 2·rmax [default: 2]
    #[arg(long)]
    pub rmax: Option<u32>,
}

pub fn build_hamiltonian(ctx: &Ctx, flags: &BuildArgs) -> Result<(), CliError> {
    let a = ctx.args("build-hamiltonian", flags)?;
    let k = need(&a.k, "K")?;
    let h = build_nls_hamiltonian(&model(&a.derivatives, a.polynomial)?, k, a.rmax.unwrap_or(2))?;
    let report = json!({
        "terms": h.len(),
        "degrees": h.degrees(),
        "truncation": value(h.truncation())?,
        "hamiltonian": value(&h)?,
    });
    ctx.emit("build-hamiltonian", &a, report)
}

// ---- normal-form ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct NormalFormArgs {
    /// Hamiltonian JSON to normalize instead of building one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub derivatives: Option<Vec<String>>,
    #[arg(long)]
    pub polynomial: Option<bool>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<i32>,
    /// Normal-form order 2r [default: 4]
    #[arg(long)]
    pub order: Option<u32>,
    /// `all` (every non-integrable term with Ω ≠ 0) or `q9:<c>` (|Ω| ≥ c·q⁹) [default: all]
    #[arg(long)]
    pub policy: Option<String>,
    /// Leave paired terms in place [default: false]
    #[arg(long)]
    pub exclude_paired: Option<bool>,
    /// Include every generator χ in the report [default: false]
    #[arg(long)]
    pub generators: Option<bool>,
    /// Also report the integrable part of this degree.
    #[arg(long)]
    pub integrable_degree: Option<u32>,
}

fn policy(s: Option<&str>) -> Result<ThresholdPolicy, CliError> {
    match s.unwrap_or("all") {
        "all" => Ok(ThresholdPolicy::AllNonresonant),
        p => match p.strip_prefix("q9:").map(str::parse::<f64>) {
            Some(Ok(c)) if c > 0.0 => Ok(ThresholdPolicy::Q9 { c }),
            _ => Err(CliError::Config(format!("unknown threshold policy `{p}` (use `all` or `q9:<c>`)"))),
        },
    }
}

pub fn normal_form(ctx: &Ctx, flags: &NormalFormArgs) -> Result<(), CliError> {
    let a = ctx.args("normal-form", flags)?;
    let order = a.order.unwrap_or(4);
    let h = match &a.input {
        Some(p) => read_hamiltonian(p)?,
        None => build_nls_hamiltonian(&model(&a.derivatives, a.polynomial)?, need(&a.k, "K")?, (order / 2).max(2))?,
    };
    let mut sel = Selection::new(policy(a.policy.as_deref())?);
    if a.exclude_paired.unwrap_or(false) {
        sel = sel.excluding_paired();
    }
    let r = birkhoff_normal_form(&h, order, &sel)?;
    let mut report = json!({
        "order": r.order,
        "minAbsDivisor": r.min_abs_divisor,
        "truncation": value(r.truncation)?,
        "normalFormTerms": r.normal_form.len(),
        "removed": r.removed.iter().map(|(d, h)| json!({"degree": d, "terms": h.len()})).collect::<Vec<_>>(),
        "normalForm": value(&r.normal_form)?,
    });
    let gens: Vec<Value> = r
        .generators
        .iter()
        .map(|(d, chi)| {
            let mut g = json!({"degree": d, "terms": chi.len()});
            if a.generators.unwrap_or(false) {
                g["generator"] = value(chi)?;
            }
            Ok(g)
        })
        .collect::<Result<_, CliError>>()?;
    report["generators"] = Value::Array(gens);
    if let Some(deg) = a.integrable_degree {
        let z = extract_integrable_part(&r.normal_form, deg);
        report["integrable"] = value(&z)?;
        if deg == 6 {
            let two: Vec<Value> = two_site_sextic_terms(&z)
                .into_iter()
                .map(|(k, l, c)| {
                    let d = i64::from(k - l);
                    json!({"k": k, "l": l, "coeff": c.to_string(), "coeffTimesGapSquared": c.scale(&BigRational::from_integer((d * d).into())).to_string()})
                })
                .collect();
            report["twoSiteSextic"] = Value::Array(two);
        }
    }
    ctx.emit("normal-form", &a, report)
}

// ---- verify-divisors ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct DivisorArgs {
    /// Number of u factors (and of ū factors).
    #[arg(long)]
    pub q: Option<u32>,
    /// Mode bound |ℓ| ≤ N.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<i32>,
    /// Keep tuples with |Ω| ≤ bound (implication scan) [default: 0]
    #[arg(long)]
    pub bound: Option<i64>,
    /// `implication` (max |ℓ₁*|/|ℓ₃*|²) or `lower-bound` (min |Ω||ℓ₃*|²/|ℓ₁*|) [default: implication]
    #[arg(long)]
    pub kind: Option<String>,
}

pub fn verify_divisors(ctx: &Ctx, flags: &DivisorArgs) -> Result<(), CliError> {
    let a = ctx.args("verify-divisors", flags)?;
    let (q, n) = (need(&a.q, "q")?, need(&a.n, "N")?);
    let r = match a.kind.as_deref().unwrap_or("implication") {
        "implication" => verify_quasi_resonant_implication(q, n, a.bound.unwrap_or(0))?,
        "lower-bound" => verify_divisor_lower_bound(q, n)?,
        k => return Err(CliError::Config(format!("unknown scan kind `{k}`"))),
    };
    ctx.emit("verify-divisors", &a, value(r)?)
}

// ---- wick-check ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct WickArgs {
    /// Wick order p.
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<i32>,
    /// Random states [default: 100]
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ‖u‖ of each state [default: 1]
    #[arg(long)]
    pub norm: Option<f64>,
    /// Largest excited |k| [default: K]
    #[arg(long)]
    pub support: Option<usize>,
    /// Also expand the identity symbolically [default: false]
    #[arg(long)]
    pub symbolic: Option<bool>,
    /// Pass threshold for the numeric residual [default: 1e-12]
    #[arg(long)]
    pub tolerance: Option<f64>,
}

pub fn wick_check(ctx: &Ctx, flags: &WickArgs) -> Result<(), CliError> {
    let a = ctx.args("wick-check", flags)?;
    let (p, k) = (need(&a.p, "p")?, need(&a.k, "K")?);
    if k < 0 {
        return Err(CliError::Config(format!("K must be nonnegative, got {k}")));
    }
    let tol = a.tolerance.unwrap_or(1e-12);
    let mut rng = derived_rng(a.seed.unwrap_or(0), "wick-check", 0);
    let support = a.support.unwrap_or(k as usize).min(k as usize);
    let states: Vec<State> = (0..a.samples.unwrap_or(100)).map(|_| State::random(k as usize, support, a.norm.unwrap_or(1.0), &mut rng)).collect();
    let res = if p >= 2 && !states.is_empty() { wick_identity_residuals(p, k, &states)? } else { Vec::new() };
    let max = res.iter().copied().fold(0.0, f64::max);
    let mean = if res.is_empty() { 0.0 } else { res.iter().sum::<f64>() / res.len() as f64 };
    let symbolic = match a.symbolic {
        Some(true) if p >= 2 => Some(wick_identity_difference(p, k)?.len()),
        _ => None,
    };
    let block = wick_hamiltonian(p, k);
    let bound = coefficient_bound_report(&block);
    let over = overpairing_report(&block);
    let pass = max <= tol && symbolic.is_none_or(|n| n == 0) && bound.pass && over.pass;
    let report = json!({
        "maxResidual": max,
        "meanResidual": mean,
        "tolerance": tol,
        "symbolicResidualTerms": symbolic,
        "coefficientBound": value(&bound)?,
        "overpairing": value(&over)?,
        "pass": pass,
    });
    ctx.emit("wick-check", &a, report)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!("Wick check at p = {p}, K = {k}: max residual {max:e}")))
    }
}

// ---- shared model for open / kam-sample / twist ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct OpenArgs {
    /// Hamiltonian JSON to open instead of a normal form.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub derivatives: Option<Vec<String>>,
    #[arg(long)]
    pub polynomial: Option<bool>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<i32>,
    /// Normal-form order computed before opening [default: 4]
    #[arg(long)]
    pub order: Option<u32>,
    /// Amplitude scale ε: the Hamiltonian is replaced by ε⁻⁴H(εu).
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sites: Option<Vec<i32>>,
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<f64>>,
    /// Highest power of y kept in the binomial series [default: 2]
    #[arg(long)]
    pub y_order: Option<u32>,
    /// Radius r of the action window [r^{2ν}, 2r^{2ν}].
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Include the opened Hamiltonian term by term [default: true]
    #[arg(long)]
    pub full: Option<bool>,
}

fn window(r: Option<f64>, nu: Option<f64>) -> Option<RadiiWindow> {
    (r.is_some() || nu.is_some()).then(|| RadiiWindow { r: r.unwrap_or(0.1), nu: nu.unwrap_or(0.75) })
}

fn normalized(input: &Option<PathBuf>, derivatives: &Option<Vec<String>>, polynomial: Option<bool>, k: Option<i32>, order: u32) -> Result<Hamiltonian, CliError> {
    let h = match input {
        Some(p) => return read_hamiltonian(p),
        None => build_nls_hamiltonian(&model(derivatives, polynomial)?, need(&k, "K")?, (order / 2).max(2))?,
    };
    Ok(birkhoff_normal_form(&h, order, &Selection::default())?.normal_form)
}

pub fn open(ctx: &Ctx, flags: &OpenArgs) -> Result<(), CliError> {
    let a = ctx.args("open", flags)?;
    let mut h = normalized(&a.input, &a.derivatives, a.polynomial, a.k, a.order.unwrap_or(4))?;
    if let Some(e) = &a.eps {
        h = h.amplitude_rescaled(&rational(e)?);
    }
    let spec = OpeningSpec { sites: need(&a.sites, "sites")?, xi: need(&a.xi, "xi")?, window: window(a.r, a.nu), y_order: a.y_order.unwrap_or(2) };
    let aa = open_sites(&h, &spec)?;
    let mut classes = serde_json::Map::new();
    for (name, class) in [("int", Projection::Int), ("ajet", Projection::Ajet), ("nor", Projection::Nor), ("rem", Projection::Rem)] {
        let part = project(&aa, class);
        classes.insert(name.into(), json!({"terms": part.len(), "majorantNorm": part.majorant_norm(&spec.xi)}));
    }
    let mut report = json!({
        "sites": aa.sites(),
        "terms": aa.len(),
        "conservative": aa.check_conservation().is_ok(),
        "majorantNorm": aa.majorant_norm(&spec.xi),
        "projections": Value::Object(classes),
    });
    if a.full.unwrap_or(true) {
        report["hamiltonian"] = value(&aa)?;
    }
    ctx.emit("open", &a, report)
}

/// Shared keys of `kam-sample` and `twist`: the frequency map of the opened degree-4 normal form.
#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct MapArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub derivatives: Option<Vec<String>>,
    #[arg(long)]
    pub polynomial: Option<bool>,
    /// Cutoff [default: 6]
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<i32>,
    /// Opened sites [default: 1,2]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sites: Option<Vec<i32>>,
    /// Expansion point of the opening [default: middle of the window]
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<f64>>,
    /// Amplitude scale ε [default: 1/100]
    #[arg(long)]
    pub eps: Option<String>,
    /// Integrable template weight κ in λ = (ω − ε⁻²j² − κξ)/ε [default: 2]
    #[arg(long)]
    pub kappa: Option<String>,
    /// Exterior modes with tracked frequencies [default: all of [−K, K]]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window_modes: Option<Vec<i32>>,
    /// Window radius r [default: 0.1]
    #[arg(long)]
    pub r: Option<f64>,
    /// Window exponent ν in (1/2, 1) [default: 0.75]
    #[arg(long)]
    pub nu: Option<f64>,
}

struct Built {
    map: FrequencyMap,
    window: RadiiWindow,
    eps: f64,
}

fn frequency_map(m: &MapArgs) -> Result<Built, CliError> {
    let k = m.k.unwrap_or(6);
    let eps = rational(m.eps.as_deref().unwrap_or("1/100"))?;
    if !(eps > BigRational::zero()) {
        return Err(CliError::Config("eps must be positive".into()));
    }
    let kappa = rational(m.kappa.as_deref().unwrap_or("2"))?;
    let window = RadiiWindow { r: m.r.unwrap_or(0.1), nu: m.nu.unwrap_or(0.75) };
    window.validate()?;
    let sites = m.sites.clone().unwrap_or_else(|| vec![1, 2]);
    let (lo, hi) = window.bounds();
    let xi = m.xi.clone().unwrap_or_else(|| vec![0.5 * (lo + hi); sites.len()]);
    let h = build_nls_hamiltonian(&model(&m.derivatives, m.polynomial)?, k, 2)?;
    let nf = birkhoff_normal_form(&h, 4, &Selection::default())?.normal_form.amplitude_rescaled(&eps);
    let aa = open_sites(&nf, &OpeningSpec { sites, xi, window: None, y_order: 2 })?;
    let modes = m.window_modes.clone().unwrap_or_else(|| (-k..=k).collect());
    let eps_f = nlsnf::hamcore::rational_to_f64(&eps);
    Ok(Built { map: FrequencyMap::from_normal_form(&aa, &modes, eps, kappa)?, window, eps: eps_f })
}

// ---- kam-sample ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct KamArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub map: MapArgs,
    /// Exterior modes per divisor [default: 0]
    #[arg(long)]
    pub d: Option<u32>,
    /// k ∈ [−k-box, k-box]^S [default: 2]
    #[arg(long)]
    pub k_box: Option<i32>,
    /// Explicit k vectors: `1,-1;2,1` (overrides k-box)
    #[arg(long, allow_hyphen_values = true)]
    pub k_list: Option<String>,
    /// Pool of exterior modes [default: non-site window modes]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub exterior_modes: Option<Vec<i32>>,
    /// Keep only mass/momentum-conserving divisors [default: true]
    #[arg(long)]
    pub conservative_only: Option<bool>,
    /// Threshold scale [default: 0.01]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Threshold exponent [default: d + 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// [default: 10000]
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn k_list(s: &str) -> Result<Vec<Vec<i32>>, CliError> {
    s.split(';')
        .map(|v| v.split(',').map(|x| x.trim().parse::<i32>().map_err(|_| CliError::Config(format!("bad k-list entry `{v}`")))).collect())
        .collect()
}

pub fn kam_sample(ctx: &Ctx, flags: &KamArgs) -> Result<(), CliError> {
    let a = ctx.args("kam-sample", flags)?;
    let built = frequency_map(&a.map)?;
    let defaults = SmallDivisorConfig::default();
    let cfg = SmallDivisorConfig {
        window: built.window,
        d: a.d.unwrap_or(0),
        k_box: a.k_box.unwrap_or(defaults.k_box),
        k_list: a.k_list.as_deref().map(k_list).transpose()?,
        exterior_modes: a.exterior_modes.clone(),
        conservative_only: a.conservative_only.unwrap_or(true),
        gamma: a.gamma.unwrap_or(defaults.gamma),
        alpha: a.alpha,
        samples: a.samples.unwrap_or(defaults.samples),
        seed: a.seed.unwrap_or(0),
    };
    let r = small_divisor_bad_measure(&built.map, &cfg)?;
    ctx.emit("kam-sample", &a, json!({"sampler": value(&cfg)?, "result": value(&r)?}))
}

// ---- twist ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct TwistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub map: MapArgs,
    /// Row modes j [default: every tracked mode]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rows: Option<Vec<i32>>,
    /// Evaluation point [default: the opening point]
    #[arg(long, value_delimiter = ',')]
    pub xi0: Option<Vec<f64>>,
    /// Finite-difference step [default: 1e-6]
    #[arg(long)]
    pub step: Option<f64>,
    /// Decay exponent δ of the Lipschitz shape [default: 1]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Weight exponent s₀ [default: 2]
    #[arg(long)]
    pub s0: Option<f64>,
    /// Write the central-difference matrix here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn twist(ctx: &Ctx, flags: &TwistArgs) -> Result<(), CliError> {
    let a = ctx.args("twist", flags)?;
    let built = frequency_map(&a.map)?;
    let xi0 = match &a.xi0 {
        Some(x) => x.clone(),
        None => {
            let (lo, hi) = built.window.bounds();
            vec![0.5 * (lo + hi); built.map.sites().len()]
        }
    };
    let m = lambda_lipschitz_matrix(&built.map, a.rows.as_deref(), &xi0, a.step.unwrap_or(1e-6))?;
    let rep = LipschitzReport::new(&m, built.eps, a.delta.unwrap_or(1.0), a.s0.unwrap_or(2.0));
    if let Some(p) = &a.csv {
        write(p, &m.to_csv())?;
    }
    let report = json!({
        "rows": m.rows,
        "cols": m.cols,
        "maxCentralForwardGap": m.max_central_forward_gap(),
        "maxCentralExactGap": m.max_central_exact_gap(),
        "lipschitz": value(&rep)?,
    });
    ctx.emit("twist", &a, report)
}

// ---- sparsity-check ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SparsityArgs {
    /// One integer per line; `#` starts a comment.
    #[arg(long)]
    pub sequence_file: Option<PathBuf>,
    /// Use k_p = 2^(2^p), p = 1..n.
    #[arg(long)]
    pub doubly_exponential: Option<u32>,
    /// Use k_p = p, p = 1..n.
    #[arg(long)]
    pub arithmetic: Option<u32>,
}

pub fn sparsity_check(ctx: &Ctx, flags: &SparsityArgs) -> Result<(), CliError> {
    let a = ctx.args("sparsity-check", flags)?;
    let given = [a.sequence_file.is_some(), a.doubly_exponential.is_some(), a.arithmetic.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        if given == 0 {
            return Err(CliError::Missing("sequence-file".into()));
        }
        return Err(CliError::Config("give exactly one of sequence-file, doubly-exponential, arithmetic".into()));
    }
    let seq: Vec<BigInt> = if let Some(p) = &a.sequence_file {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
        parse_sequence(&text)?
    } else if let Some(n) = a.doubly_exponential {
        doubly_exponential(n)
    } else {
        (1..=a.arithmetic.unwrap_or(0)).map(BigInt::from).collect()
    };
    let trend = sparsity_trend(&seq)?;
    let report = json!({
        "length": seq.len(),
        "functional": trend.values.last(),
        "incrementsShrink": trend.increments_shrink(),
        "trend": value(&trend)?,
    });
    ctx.emit("sparsity-check", &a, report)
}

// ---- simulate ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Nonlinearity: `cubic` or f^(m)(0) values [default: cubic]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub model: Option<Vec<String>>,
    #[arg(long)]
    pub polynomial: Option<bool>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// ‖u₀‖ of the seeded random initial state.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest excited |k| at t = 0 [default: K]
    #[arg(long)]
    pub support: Option<usize>,
    /// `split-step`, `rk4` or `lawson-rk4` [default: split-step]
    #[arg(long)]
    pub scheme: Option<String>,
    /// Record every n steps [default: 1]
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Degree 2·rmax of the simulated model [default: 2]
    #[arg(long)]
    pub rmax: Option<u32>,
    /// Write the trajectory here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn simulate(ctx: &Ctx, flags: &SimulateArgs) -> Result<(), CliError> {
    let a = ctx.args("simulate", flags)?;
    let k = need(&a.k, "K")?;
    let (dt, t, amp) = (need(&a.dt, "dt")?, need(&a.t, "T")?, need(&a.amplitude, "amplitude")?);
    if !(dt > 0.0) || !(amp >= 0.0) {
        return Err(CliError::Config("dt must be positive and amplitude nonnegative".into()));
    }
    let scheme = match a.scheme.as_deref().unwrap_or("split-step") {
        "split-step" => Scheme::split_step(),
        "rk4" => Scheme::Rk4,
        "lawson-rk4" => Scheme::LawsonRk4,
        s => return Err(CliError::Config(format!("unknown scheme `{s}`"))),
    };
    let spec = model(&a.model, a.polynomial)?;
    let rmax = a.rmax.unwrap_or(2);
    let field = NlsField::new(&spec, k, rmax)?;
    let energy = NumericHamiltonian::compile(&build_nls_hamiltonian(&spec, k as i32, rmax)?, k)?;
    let mut rng = derived_rng(a.seed.unwrap_or(0), "simulate-initial", 0);
    let u0 = State::random(k, a.support.unwrap_or(k).min(k), amp, &mut rng);
    let traj = integrate(&field, &u0, dt, t, scheme, a.record_every.unwrap_or(1))?;
    let modes: Vec<i32> = (-(k as i32)..=k as i32).collect();
    let drift = action_drift(&traj, &modes, Some(&energy))?;
    if let Some(p) = &a.csv {
        write(p, &traj.to_csv())?;
    }
    let report = json!({
        "method": traj.method,
        "steps": (t / dt).round() as u64,
        "samples": traj.states.len(),
        "initialMass": u0.mass(),
        "finalMass": traj.final_state().mass(),
        "drift": value(&drift)?,
    });
    ctx.emit("simulate", &a, report)
}

// ---- experiment invariance ----

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct InvarianceArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub derivatives: Option<Vec<String>>,
    #[arg(long)]
    pub polynomial: Option<bool>,
    /// [default: 8]
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    /// Normal-form order 2r [default: 6]
    #[arg(long)]
    pub order: Option<u32>,
    /// [default: 1,2,3]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sites: Option<Vec<i32>>,
    /// Relative actions on the sites [default: 1,0.5,0.75]
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<f64>>,
    /// [default: 0.01]
    #[arg(long)]
    pub eps: Option<f64>,
    /// [default: 100]
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// [default: 0.001]
    #[arg(long)]
    pub dt: Option<f64>,
    /// [default: 500]
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Required drift ratio [default: 10]
    #[arg(long)]
    pub factor: Option<f64>,
    /// RK4 steps per coordinate-change flow [default: 8]
    #[arg(long)]
    pub flow_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ε values for the composition-error fit, e.g. `0.16,0.08,0.04`.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    /// Composition tolerance on the fitted exponent [default: 0.3]
    #[arg(long)]
    pub exponent_tolerance: Option<f64>,
}

pub fn invariance(ctx: &Ctx, flags: &InvarianceArgs) -> Result<(), CliError> {
    let a = ctx.args("invariance", flags)?;
    let d = InvarianceConfig::default();
    let cfg = InvarianceConfig {
        derivatives: a.derivatives.clone().unwrap_or(d.derivatives),
        polynomial: a.polynomial.unwrap_or(d.polynomial),
        cutoff: a.k.unwrap_or(d.cutoff),
        order: a.order.unwrap_or(d.order),
        sites: a.sites.clone().unwrap_or(d.sites),
        xi: a.xi.clone().unwrap_or(d.xi),
        eps: a.eps.unwrap_or(d.eps),
        t_final: a.t.unwrap_or(d.t_final),
        dt: a.dt.unwrap_or(d.dt),
        record_every: a.record_every.unwrap_or(d.record_every),
        factor: a.factor.unwrap_or(d.factor),
        flow_steps: a.flow_steps.unwrap_or(d.flow_steps),
        seed: a.seed.unwrap_or(d.seed),
    };
    let (raw, nf) = prepare(&cfg)?;
    let inv = invariance_with(&cfg, &nf)?;
    let mut pass = inv.pass;
    let mut report = json!({"invariance": value(&inv)?});
    if let Some(sweep) = &a.sweep {
        let mut comp = composition_error_sweep(&cfg, &nf, &raw, sweep)?;
        let tol = a.exponent_tolerance.unwrap_or(0.3);
        comp.pass = (comp.fitted_exponent - comp.expected_exponent).abs() <= tol;
        pass &= comp.pass;
        report["composition"] = value(&comp)?;
    }
    report["pass"] = Value::Bool(pass);
    ctx.emit("experiment invariance", &a, report)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!("invariance experiment: drift ratio {:.3e}", inv.ratio)))
    }
}
