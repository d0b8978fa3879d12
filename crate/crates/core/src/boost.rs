//! Composition of parity circuits: the spec arithmetic of the recursive
//! constructions, an explicit circuit builder for the three-stage
//! composition, and the threshold search for slowly growing depth functions.
//!
//! A `C(d, n, a)` spec has depth `d`, `n` inputs, `a` ancillae and computes
//! parity with worst-case success `(1 + δ)/2`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
#[allow(unused_imports)] // Float is inherent once a dependency enables num-traits/std
use num_traits::Float;
use num_traits::{One, ToPrimitive, Zero};

use crate::circuit::{AncillaState, QacCircuit};
use crate::{Error, Result};

/// Success margin `δ`. Margins built from one base gadget stay symbolic as
/// `δ^e`, so huge exponents never underflow.
#[derive(Clone, Debug, PartialEq)]
pub enum Margin {
    /// `δ^e` for the base gadget's `δ`.
    Power(BigUint),
    Value(f64),
}

impl Margin {
    pub fn base() -> Self {
        Margin::Power(BigUint::one())
    }

    /// `ln δ` for a given base margin.
    pub fn ln(&self, base: f64) -> f64 {
        match self {
            Margin::Power(e) => {
                // 1^∞ and δ^0 are both 1; avoid ∞·0 when the exponent overflows f64
                if e.is_zero() || base == 1.0 {
                    0.0
                } else {
                    big_to_f64(e) * base.ln()
                }
            }
            Margin::Value(v) => v.ln(),
        }
    }

    pub fn value(&self, base: f64) -> f64 {
        self.ln(base).exp()
    }

    pub fn exponent(&self) -> Option<&BigUint> {
        match self {
            Margin::Power(e) => Some(e),
            Margin::Value(_) => None,
        }
    }
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    pub depth: u64,
    pub inputs: BigUint,
    pub ancillae: BigUint,
    pub margin: Margin,
}

impl CircuitSpec {
    pub fn new(depth: u64, inputs: impl Into<BigUint>, ancillae: impl Into<BigUint>, margin: Margin) -> Result<Self> {
        let spec = CircuitSpec { depth, inputs: inputs.into(), ancillae: ancillae.into(), margin };
        if spec.inputs.is_zero() {
            return Err(Error::OutOfRange("a spec needs at least one input".into()));
        }
        if let Margin::Value(v) = spec.margin {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange(format!("margin {v} outside [0, 1]")));
            }
        }
        Ok(spec)
    }

    /// Worst-case success `(1 + δ)/2`.
    pub fn success(&self, base: f64) -> f64 {
        (1.0 + self.margin.value(base)) / 2.0
    }

    /// `(d, n, a)` as machine integers when they fit.
    pub fn triple(&self) -> Option<(u64, u64, u64)> {
        Some((self.depth, self.inputs.to_u64()?, self.ancillae.to_u64()?))
    }
}

/// Spec of the circuit computing parity of `n_t · n_b` bits from `n_t`
/// bottom copies, one CNOT layer into fresh ancillae, and one top copy.
pub fn compose_specs(top: &CircuitSpec, bottom: &CircuitSpec) -> CircuitSpec {
    let n_t = &top.inputs;
    let margin = match (&top.margin, &bottom.margin) {
        (Margin::Power(et), Margin::Power(eb)) => Margin::Power(eb * n_t + et),
        _ => {
            // numeric margins have no shared base; evaluate with base 1
            let lb = bottom.margin.ln(1.0);
            let lt = top.margin.ln(1.0);
            Margin::Value((big_to_f64(n_t) * lb + lt).exp())
        }
    };
    CircuitSpec {
        depth: top.depth + bottom.depth + 1,
        inputs: n_t * &bottom.inputs,
        ancillae: n_t * (&bottom.ancillae + 1u32) + &top.ancillae,
        margin,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoostStep {
    pub lemma: String,
    pub parameters: String,
    pub top: CircuitSpec,
    pub bottom: CircuitSpec,
    /// What the composition actually produces.
    pub composed: CircuitSpec,
    /// The induction bullet this step must meet.
    pub claimed: CircuitSpec,
    pub audit_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoostPlan {
    pub label: String,
    pub base: CircuitSpec,
    pub steps: Vec<BoostStep>,
    /// The closed-form spec of the lemma or theorem.
    pub final_spec: CircuitSpec,
    pub flags: Vec<String>,
    pub checks: Vec<(String, bool)>,
}

impl BoostPlan {
    pub fn audit_ok(&self) -> bool {
        self.steps.iter().all(|s| s.audit_ok) && self.checks.iter().all(|(_, ok)| *ok)
    }

    /// Indented tree of the composition steps, top-level step first.
    pub fn render_tree(&self) -> String {
        let mut out = format!("{}\n", self.label);
        out += &format!("└─ final {}\n", spec_line(&self.final_spec));
        for (i, s) in self.steps.iter().enumerate().rev() {
            let pad = "   ".repeat(self.steps.len() - i);
            out += &format!("{pad}└─ {} [{}] -> {}\n", s.lemma, s.parameters, spec_line(&s.composed));
            out += &format!("{pad}   ├─ top    {}\n", spec_line(&s.top));
            out += &format!("{pad}   └─ bottom {}\n", spec_line(&s.bottom));
        }
        if self.steps.is_empty() {
            out += &format!("   └─ base {}\n", spec_line(&self.base));
        }
        out
    }
}

fn spec_line(s: &CircuitSpec) -> String {
    let margin = match &s.margin {
        Margin::Power(e) => format!("δ^{e}"),
        Margin::Value(v) => format!("{v}"),
    };
    format!("C({}, {}, {}) margin {margin}", s.depth, s.inputs, s.ancillae)
}

fn at_least(actual: &CircuitSpec, claimed: &CircuitSpec) -> bool {
    // margins compare as exponents of a base δ ≤ 1: a smaller exponent is better
    let margin_ok = match (&actual.margin, &claimed.margin) {
        (Margin::Power(a), Margin::Power(c)) => a <= c,
        _ => true,
    };
    actual.depth <= claimed.depth
        && actual.inputs == claimed.inputs
        && actual.ancillae <= claimed.ancillae
        && margin_ok
}

fn pow(n: u64, e: u64) -> BigUint {
    BigUint::from(n).pow(e as u32)
}

/// Largest count a plan may hold, in bits.
pub const PLAN_BIT_LIMIT: f64 = 65536.0;

/// Refuse plans whose largest count is `n^exponent` past [`PLAN_BIT_LIMIT`].
fn check_plan_size(n: u64, exponent: f64) -> Result<()> {
    let bits = exponent * (n as f64).log2();
    if bits > PLAN_BIT_LIMIT {
        return Err(Error::OutOfRange(format!("plan needs counts of about 2^{bits:.0}, above 2^{PLAN_BIT_LIMIT}")));
    }
    Ok(())
}

/// Apply the composition `c − 1` times with the base circuit at the bottom,
/// turning `C(d, n, n^c)` into `C(c(d+1), n^c, n^{2c})`.
pub fn step1_plan(d: u64, n: u64, c: u64) -> Result<BoostPlan> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("n = {n} must be at least 3")));
    }
    if c < 1 || d < 1 {
        return Err(Error::OutOfRange("depth and exponent must be positive".into()));
    }
    check_plan_size(n, 2.0 * c as f64)?;
    let base = CircuitSpec::new(d, n, pow(n, c), Margin::base())?;
    let mut steps = Vec::new();
    let mut v = base.clone();
    for i in 2..=c {
        let composed = compose_specs(&v, &base);
        let claimed = CircuitSpec::new(
            i * (d + 1),
            pow(n, i),
            pow(n, i + c),
            Margin::Power(BigUint::from(i) * pow(n, c - 1)),
        )?;
        let audit_ok = at_least(&composed, &claimed);
        steps.push(BoostStep {
            lemma: "compose".into(),
            parameters: format!("V_{i}: top V_{}, bottom U", i - 1),
            top: v.clone(),
            bottom: base.clone(),
            composed: composed.clone(),
            claimed,
            audit_ok,
        });
        v = composed;
    }
    let final_spec = if c == 1 {
        base.clone()
    } else {
        CircuitSpec::new(c * (d + 1), pow(n, c), pow(n, 2 * c), Margin::Power(BigUint::from(c) * pow(n, c - 1)))?
    };
    let checks = vec![(String::from("composed spec within the closed form"), at_least(&v, &final_spec))];
    Ok(BoostPlan {
        label: format!("step 1: d={d}, n={n}, c={c}"),
        base,
        steps,
        final_spec,
        flags: Vec::new(),
        checks,
    })
}

/// `(2^k + log_n 2k)/(2^k − 1) ≤ 1 + 2^{−k+1}`, the exponent simplification.
pub fn step2_exponent_check(n: u64, k: u64) -> (f64, f64, bool) {
    let two_k = 2f64.powi(k as i32);
    let lhs = (two_k + (2.0 * k as f64).ln() / (n as f64).ln()) / (two_k - 1.0);
    let rhs = 1.0 + 2f64.powi(-(k as i32) + 1);
    (lhs, rhs, lhs <= rhs + 1e-12)
}

/// Compose the ladder `C(d, n^{2^i}, n^{2^{i+1}})`, `i < k`, bottom-up into
/// `C(k(d+1), n^{2^k−1}, 2k·n^{2^k})`.
pub fn step2_plan(d: u64, n: u64, k: u64) -> Result<BoostPlan> {
    if k < 2 {
        return Err(Error::OutOfRange(format!("k = {k} must be at least 2")));
    }
    if n < 2 || d < 1 {
        return Err(Error::OutOfRange("need n ≥ 2 and d ≥ 1".into()));
    }
    check_plan_size(n, 2f64.powi(k.min(1024) as i32))?;
    let ladder = |i: u64| CircuitSpec::new(d, pow(n, 1 << i), pow(n, 1 << (i + 1)), Margin::base());
    let base = ladder(0)?;
    let mut v = base.clone();
    let mut steps = Vec::new();
    for i in 2..=k {
        let top = ladder(i - 1)?;
        let composed = compose_specs(&top, &v);
        let mut claimed = CircuitSpec::new(
            i * (d + 1),
            pow(n, (1 << i) - 1),
            BigUint::from(2 * i) * pow(n, 1 << i),
            Margin::Power(BigUint::zero()),
        )?;
        // the ladder margins are all 1 − negl; only the structural fields are claimed
        claimed.margin = composed.margin.clone();
        let audit_ok = at_least(&composed, &claimed);
        steps.push(BoostStep {
            lemma: "compose".into(),
            parameters: format!("V_{i}: top U_{}, bottom V_{}", i - 1, i - 1),
            top,
            bottom: v.clone(),
            composed: composed.clone(),
            claimed,
            audit_ok,
        });
        v = composed;
    }
    let mut final_spec =
        CircuitSpec::new(k * (d + 1), pow(n, (1 << k) - 1), BigUint::from(2 * k) * pow(n, 1 << k), Margin::base())?;
    final_spec.margin = v.margin.clone();
    let mut flags = Vec::new();
    let (lhs, rhs, holds) = step2_exponent_check(n, k);
    if n < 4 * k * k {
        flags.push(format!("n = {n} < 4k² = {}: exponent simplification not claimed", 4 * k * k));
    }
    let checks = vec![
        (String::from("composed spec within the closed form"), at_least(&v, &final_spec)),
        (format!("exponent {lhs:.6} ≤ {rhs:.6}"), holds || n < 4 * k * k),
    ];
    Ok(BoostPlan { label: format!("step 2: d={d}, n={n}, k={k}"), base, steps, final_spec, flags, checks })
}

/// `(K+1)(c(d+1)+1) ≤ 3Kc(d+1)`.
pub fn depth_inequality(k: u64, c: u64, d: u64) -> bool {
    let x = c * (d + 1);
    (k + 1) * (x + 1) <= 3 * k * x
}

/// First `(K, c, d)` in `[1, max]³` violating [`depth_inequality`].
pub fn depth_inequality_sweep(max: u64) -> Option<(u64, u64, u64)> {
    for k in 1..=max {
        for c in 1..=max {
            for d in 1..=max {
                if !depth_inequality(k, c, d) {
                    return Some((k, c, d));
                }
            }
        }
    }
    None
}

/// Smallest `m ≥ N₀` with `m^c ≥ 4K²`.
pub fn smallest_admissible_m(c: u64, big_k: u64, n0: u64) -> u64 {
    let need = BigUint::from(4 * big_k * big_k);
    let mut m = n0.max(2);
    while pow(m, c) < need {
        m += 1;
    }
    m
}

/// `n = m^{(2^{K+1}−1)c}`.
pub fn admissible_n(m: u64, c: u64, big_k: u64) -> BigUint {
    pow(m, ((1u64 << (big_k + 1)) - 1) * c)
}

/// Step 1 on each rung `m^{2^i}`, `i ≤ K`, then step 2 with `k = K + 1`
/// and `n = m^c`. The result is `C((K+1)(c(d+1)+1), n, 2(K+1)m^{c·2^{K+1}})`.
pub fn full_plan(d: u64, c: u64, big_k: u64, n0: u64) -> Result<BoostPlan> {
    if big_k < 1 || c < 1 || d < 1 || n0 < 1 {
        return Err(Error::OutOfRange("d, c, K and N0 must be positive".into()));
    }
    if big_k > 5 {
        return Err(Error::OutOfRange(format!("K = {big_k} gives an input count too large to tabulate")));
    }
    let m = smallest_admissible_m(c, big_k, n0).max(3);
    let n = admissible_n(m, c, big_k);
    let big_d = 3 * c * (d + 1);
    let mut steps = Vec::new();
    let mut flags = Vec::new();
    // step 1 on each rung; the rung circuits are C(c(d+1), m^{2^i c}, m^{2^{i+1} c})
    let mut rungs = Vec::new();
    for i in 0..=big_k {
        let mi = m.checked_pow(1 << i).ok_or_else(|| Error::OutOfRange("rung size overflows".into()))?;
        let p = step1_plan(d, mi, c)?;
        if !p.audit_ok() {
            flags.push(format!("step 1 audit failed on rung {i}"));
        }
        let mut rung = p.final_spec.clone();
        rung.margin = Margin::base();
        rungs.push((i, rung, p));
    }
    let mut v = rungs[0].1.clone();
    for i in 2..=big_k + 1 {
        let top = rungs[(i - 1) as usize].1.clone();
        let composed = compose_specs(&top, &v);
        let mc = pow(m, c);
        let claimed = CircuitSpec {
            depth: i * (c * (d + 1) + 1),
            inputs: mc.pow(((1u64 << i) - 1) as u32),
            ancillae: BigUint::from(2 * i) * mc.pow(1u32 << i),
            margin: composed.margin.clone(),
        };
        let audit_ok = at_least(&composed, &claimed);
        steps.push(BoostStep {
            lemma: "compose".into(),
            parameters: format!("V_{i}: top U'_{}, bottom V_{}", i - 1, i - 1),
            top,
            bottom: v.clone(),
            composed: composed.clone(),
            claimed,
            audit_ok,
        });
        v = composed;
    }
    let k2 = big_k + 1;
    let mc = pow(m, c);
    let final_spec = CircuitSpec {
        depth: k2 * (c * (d + 1) + 1),
        inputs: n.clone(),
        ancillae: BigUint::from(2 * k2) * mc.pow(1u32 << k2),
        margin: v.margin.clone(),
    };
    let mc_u = mc.to_u64().unwrap_or(u64::MAX);
    if mc_u < 4 * k2 * k2 {
        flags.push(format!(
            "m^c = {mc_u} < 4(K+1)² = {}: ancillae exponent 1 + 2^-K not implied by the simplification",
            4 * k2 * k2
        ));
    }
    let (lhs, rhs, holds) = step2_exponent_check(mc_u, k2);
    let checks = vec![
        (format!("(K+1)(c(d+1)+1) = {} ≤ KD = {}", final_spec.depth, big_k * big_d), depth_inequality(big_k, c, d)),
        (String::from("composed spec within the closed form"), at_least(&v, &final_spec)),
        (String::from("inputs equal m^((2^(K+1)-1)c)"), v.inputs == n),
        (format!("ancillae exponent {lhs:.6} ≤ 1 + 2^-K = {rhs:.6}"), holds || mc_u < 4 * k2 * k2),
    ];
    Ok(BoostPlan {
        label: format!("full: d={d}, c={c}, K={big_k}, N0={n0}, m={m}, D={big_d}"),
        base: rungs[0].1.clone(),
        steps,
        final_spec,
        flags,
        checks,
    })
}

/// Growth function `δ(x)` for the threshold search.
#[derive(Clone, Copy, Debug)]
pub enum Growth {
    Log2,
    Ln,
    /// `x^p` for `p > 0`.
    Power(f64),
    Constant(f64),
    Custom(fn(f64) -> f64),
}

impl Growth {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Growth::Log2 => x.log2(),
            Growth::Ln => x.ln(),
            Growth::Power(p) => x.powf(*p),
            Growth::Constant(c) => *c,
            Growth::Custom(f) => f(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub big_d: u64,
    pub k: Option<u64>,
    /// `D/δ(KD)` at the reported `K`.
    pub ratio: Option<f64>,
    /// `exp(−KD/δ(KD))`, `exp(−K/2)` and `2^{−K}`, largest first.
    pub exponents: Option<(f64, f64, f64)>,
    pub note: String,
}

/// Smallest `K ≤ k_max` with `D/δ(KD) ≤ 1/2`, assuming `δ` nondecreasing.
pub fn threshold_report(delta: Growth, big_d: u64, k_max: u64) -> ThresholdReport {
    let ok = |k: u64| {
        let v = delta.eval((k as f64) * big_d as f64);
        v > 0.0 && (big_d as f64) / v <= 0.5
    };
    let mut hi = 1u64;
    while hi < k_max && !ok(hi) {
        hi = hi.saturating_mul(2).min(k_max);
    }
    if !ok(hi) {
        return ThresholdReport {
            big_d,
            k: None,
            ratio: None,
            exponents: None,
            note: format!("threshold not crossed for K ≤ {k_max}"),
        };
    }
    let mut lo = hi / 2;
    // invariant: ok(hi), and lo == 0 or !ok(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let k = hi;
    let kd = k as f64 * big_d as f64;
    let dv = delta.eval(kd);
    let e1 = (-kd / dv).exp();
    let e2 = (-(k as f64) / 2.0).exp();
    let e3 = 2f64.powi(-(k.min(i32::MAX as u64) as i32));
    ThresholdReport {
        big_d,
        k: Some(k),
        ratio: Some(big_d as f64 / dv),
        exponents: Some((e1, e2, e3)),
        note: format!("n^(1+exp(-KD/δ(KD))) ≥ n^(1+exp(-K/2)) ≥ n^(1+2^-K) at K = {k}"),
    }
}

/// Parity of `n_t · n_b` bits: `n_t` bottom copies on consecutive input
/// blocks, a CNOT from each bottom output into a fresh ancilla, and one top
/// copy on the bottom outputs.
///
/// Qubits are ordered: inputs, the bottom copies' ancillae, the fresh
/// ancillae, the top copy's ancillae.
pub fn build_composed_circuit(top: &QacCircuit, bottom: &QacCircuit, n_t: usize, n_b: usize) -> Result<QacCircuit> {
    if top.n_inputs != n_t || bottom.n_inputs != n_b {
        return Err(Error::Invalid(format!(
            "top has {} inputs and bottom {}, expected {n_t} and {n_b}",
            top.n_inputs, bottom.n_inputs
        )));
    }
    top.validate()?;
    bottom.validate()?;
    let n = n_t * n_b;
    let a_b = bottom.n_ancillae;
    let a_t = top.n_ancillae;
    let ancillae = n_t * (a_b + 1) + a_t;
    let mut out = QacCircuit::new(n, ancillae);
    let fresh = n + n_t * a_b;
    let top_anc = fresh + n_t;
    let mut bottom_outputs = Vec::with_capacity(n_t);
    for i in 0..n_t {
        let map: Vec<usize> = (0..n_b)
            .map(|q| i * n_b + q)
            .chain((0..a_b).map(|q| n + i * a_b + q))
            .collect();
        bottom_outputs.push(map[bottom.output]);
        out.embed(bottom, &map, 0)?;
    }
    let d_b = bottom.depth();
    for (i, &q) in bottom_outputs.iter().enumerate() {
        let target = fresh + i;
        out.push_local_gate_at(d_b, crate::circuit::SingleQubitGate::h(target));
        out.push_cz_gate_at(d_b, crate::circuit::CzGate::new([q, target]))?;
        out.push_local_gate_at(d_b + 1, crate::circuit::SingleQubitGate::h(target));
    }
    let map: Vec<usize> = bottom_outputs.iter().copied().chain((0..a_t).map(|q| top_anc + q)).collect();
    out.embed(top, &map, d_b + 1)?;
    // pad so the depth is exactly d_t + d_b + 1 even for idle trailing layers
    while out.depth() < top.depth() + d_b + 1 {
        out.push_cz_layer(Vec::new())?;
    }
    out.output = map[top.output];
    let mut anc = AncillaState::Zero;
    let mut width = 0;
    for _ in 0..n_t {
        anc = anc.tensor(width, &bottom.ancilla, a_b)?;
        width += a_b;
    }
    anc = anc.tensor(width, &AncillaState::Zero, n_t)?;
    width += n_t;
    anc = anc.tensor(width, &top.ancilla, a_t)?;
    out.ancilla = anc;
    out.validate()?;
    Ok(out)
}

/// `min_x Pr[output = parity(x)]` by enumeration over all inputs.
pub fn worst_case_parity_success(c: &QacCircuit) -> Result<f64> {
    let table = c.output_table()?;
    Ok(table
        .iter()
        .enumerate()
        .map(|(x, p)| if (x as u64).count_ones() % 2 == 1 { *p } else { 1.0 - p })
        .fold(1.0, f64::min))
}

/// Per-input success probabilities of a parity circuit.
pub fn parity_success_table(c: &QacCircuit) -> Result<Vec<f64>> {
    let table = c.output_table()?;
    Ok(table
        .iter()
        .enumerate()
        .map(|(x, p)| if (x as u64).count_ones() % 2 == 1 { *p } else { 1.0 - p })
        .collect())
}

/// Spec of an explicit circuit with margin `δ`.
pub fn spec_of(c: &QacCircuit, delta: f64) -> Result<CircuitSpec> {
    CircuitSpec::new(c.depth() as u64, c.n_inputs as u64, c.n_ancillae as u64, Margin::Value(delta))
}
