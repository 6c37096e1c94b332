//! Report documents behind the command-line tool. Each command produces
//! one serializable value; JSON and text are two renderings of it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::circuit::{Circuit, Claim};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_history_hamiltonian, energy, ground_energy, history_state, p_acc_from_energy,
    sampling_distribution, xz_only_check, LocalHamiltonian, Normalization, Weights,
};
use crate::oracle::{run_oracle_suite, Fault, OracleCheck};
use crate::pauli::terms_to_csv;
use crate::protocol::{
    amplification_rounds, reference_worlds, run_with_strategy, ProtocolConfig, ProverStrategy,
    ReferencePoints, Verdict,
};

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounds {
    Fixed(usize),
    Auto,
}

impl FromStr for Rounds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Rounds::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Rounds::Fixed(n)),
            _ => Err(Error::InvalidArgument(format!(
                "rounds must be a positive integer or `auto`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidArgument(format!(
                "unknown format `{s}` (expected json|text|csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// How the circuit is named in reports, usually its path.
    pub circuit_label: String,
    pub circuit: Circuit,
    pub claim: Claim,
    pub strategy: ProverStrategy,
    pub rounds: Rounds,
    pub seed: u64,
    pub weights: Weights,
    pub epsilon: f64,
    pub normalization: Normalization,
    pub oracle_cap: usize,
    /// Overrides the midpoint threshold.
    pub threshold: Option<f64>,
}

impl RunConfig {
    pub fn new(circuit_label: impl Into<String>, circuit: Circuit) -> Self {
        RunConfig {
            circuit_label: circuit_label.into(),
            circuit,
            claim: Claim::Member,
            strategy: ProverStrategy::Honest,
            rounds: Rounds::Fixed(10_000),
            seed: 0,
            weights: Weights::default(),
            epsilon: DEFAULT_EPSILON,
            normalization: Normalization::default(),
            oracle_cap: crate::hamiltonian::DEFAULT_ORACLE_CAP,
            threshold: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "threshold must lie in (0, 1), got {t}"
                )));
            }
        }
        Ok(())
    }

    fn hamiltonian(&self) -> Result<LocalHamiltonian> {
        build_history_hamiltonian(&self.circuit, self.weights, self.claim)
    }
}

/// `sha256:<hex>` of the term table's CSV form.
pub fn term_table_ref(h: &LocalHamiltonian) -> String {
    format!(
        "sha256:{}",
        hex::encode(Sha256::digest(terms_to_csv(h.terms()).as_bytes()))
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermRow {
    pub coefficient: f64,
    pub string: String,
    pub pi: f64,
    pub locality: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectDoc {
    pub circuit: String,
    pub claim: Claim,
    pub qubits: usize,
    pub steps: usize,
    pub sum_abs: f64,
    pub normalization: Normalization,
    pub xz_only: bool,
    pub max_locality: usize,
    pub locality_histogram: BTreeMap<usize, usize>,
    pub term_table_ref: String,
    pub terms: Vec<TermRow>,
}

pub fn inspect(cfg: &RunConfig) -> Result<InspectDoc> {
    let h = cfg.hamiltonian()?;
    let pi: BTreeMap<usize, f64> = sampling_distribution(&h, cfg.normalization)?
        .into_iter()
        .collect();
    let mut terms: Vec<TermRow> = h
        .terms()
        .iter()
        .enumerate()
        .map(|(i, t)| TermRow {
            coefficient: t.coefficient,
            string: t.string.to_string(),
            pi: pi.get(&i).copied().unwrap_or(0.0),
            locality: t.string.locality(),
        })
        .collect();
    terms.sort_by(|a, b| {
        b.coefficient
            .abs()
            .total_cmp(&a.coefficient.abs())
            .then_with(|| a.string.cmp(&b.string))
    });
    let mut locality_histogram = BTreeMap::new();
    for t in &terms {
        *locality_histogram.entry(t.locality).or_insert(0) += 1;
    }
    Ok(InspectDoc {
        circuit: cfg.circuit_label.clone(),
        claim: cfg.claim,
        qubits: h.qubits(),
        steps: h.steps().unwrap_or(0),
        sum_abs: h.sum_abs(),
        normalization: cfg.normalization,
        xz_only: xz_only_check(&h),
        max_locality: h.max_locality(),
        locality_histogram,
        term_table_ref: term_table_ref(&h),
        terms,
    })
}

impl InspectDoc {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coefficient,string,pi,sign,locality\n");
        for t in &self.terms {
            let sign = if t.coefficient < 0.0 { -1 } else { 1 };
            writeln!(
                out,
                "{},{},{},{},{}",
                t.coefficient, t.string, t.pi, sign, t.locality
            )
            .unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "circuit       {}", self.circuit).unwrap();
        writeln!(out, "claim         {}", self.claim).unwrap();
        writeln!(
            out,
            "qubits        {} ({} clock steps)",
            self.qubits, self.steps
        )
        .unwrap();
        writeln!(out, "sum |d_S|     {:.6}", self.sum_abs).unwrap();
        writeln!(out, "xz only       {}", self.xz_only).unwrap();
        let hist: Vec<String> = self
            .locality_histogram
            .iter()
            .map(|(k, v)| format!("{k}:{v}"))
            .collect();
        writeln!(
            out,
            "locality      max {} [{}]",
            self.max_locality,
            hist.join(" ")
        )
        .unwrap();
        writeln!(
            out,
            "{:>14}  {:>8}  {:>3}  string",
            "coefficient", "pi", "k"
        )
        .unwrap();
        for t in &self.terms {
            writeln!(
                out,
                "{:>14.8}  {:>8.5}  {:>3}  {}",
                t.coefficient, t.pi, t.locality, t.string
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Energies {
    pub ground: Option<f64>,
    pub history: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpliedAcceptance {
    /// `p_acc` of the honest history state.
    pub at_history: f64,
    /// `p_acc` of the ground state: the most any prover can reach.
    pub at_ground: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyDoc {
    pub circuit: String,
    pub claim: Claim,
    pub qubits: usize,
    pub sum_abs: f64,
    pub normalization: Normalization,
    pub energies: Energies,
    pub gap_witness: f64,
    pub p_acc: ImpliedAcceptance,
    pub reference: ReferencePoints,
}

pub fn energy_doc(cfg: &RunConfig) -> Result<EnergyDoc> {
    let h = cfg.hamiltonian()?;
    let history = energy(
        &h,
        &history_state(h.branch_circuit().expect("built from a circuit"))?,
    )?;
    let ground = ground_energy(&h, cfg.oracle_cap)?.energy;
    let reference = reference_worlds(
        &cfg.circuit,
        cfg.claim,
        cfg.weights,
        cfg.normalization,
        cfg.oracle_cap,
    )?
    .points;
    Ok(EnergyDoc {
        circuit: cfg.circuit_label.clone(),
        claim: cfg.claim,
        qubits: h.qubits(),
        sum_abs: h.sampled_sum_abs(cfg.normalization),
        normalization: cfg.normalization,
        energies: Energies {
            ground: Some(ground),
            history,
        },
        gap_witness: history - ground,
        p_acc: ImpliedAcceptance {
            at_history: p_acc_from_energy(&h, history, cfg.normalization)?,
            at_ground: p_acc_from_energy(&h, ground, cfg.normalization)?,
        },
        reference,
    })
}

impl EnergyDoc {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let r = &self.reference;
        writeln!(out, "circuit          {}", self.circuit).unwrap();
        writeln!(out, "claim            {}", self.claim).unwrap();
        writeln!(out, "qubits           {}", self.qubits).unwrap();
        writeln!(out, "normalization    {}", self.normalization.as_str()).unwrap();
        writeln!(
            out,
            "ground energy    {:.12}",
            self.energies.ground.unwrap_or(f64::NAN)
        )
        .unwrap();
        writeln!(out, "history energy   {:.12}", self.energies.history).unwrap();
        writeln!(out, "p_acc(history)   {:.12}", self.p_acc.at_history).unwrap();
        writeln!(
            out,
            "p_acc(ground)    {:.12}  (best any prover can do)",
            self.p_acc.at_ground
        )
        .unwrap();
        writeln!(out, "yes world        {:?}", r.yes_world).unwrap();
        writeln!(out, "a_ref, b_ref     {:.12}, {:.12}", r.a_ref, r.b_ref).unwrap();
        writeln!(out, "p_yes, p_no      {:.12}, {:.12}", r.p_yes, r.p_no).unwrap();
        writeln!(out, "gap              {:.12}", r.gap).unwrap();
        writeln!(out, "threshold        {:.12}", r.threshold).unwrap();
        out
    }
}

pub const ROUNDS_RULE_AUTO: &str = "hoeffding: ceil(2 ln(2/epsilon) / gap^2)";
pub const ROUNDS_RULE_FIXED: &str = "fixed";
pub const THRESHOLD_RULE_MIDPOINT: &str = "midpoint of p_yes and p_no";
pub const THRESHOLD_RULE_FIXED: &str = "fixed";

/// Key order is part of the output contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDoc {
    pub circuit: String,
    pub claim: Claim,
    pub strategy: String,
    pub n_rounds: usize,
    pub seed: u64,
    pub accept_count: usize,
    pub p_hat: f64,
    pub p_exact: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub term_table_ref: String,
    pub energies: Energies,
    pub normalization: Normalization,
    pub gap: Option<f64>,
    pub epsilon: Option<f64>,
    pub rounds_rule: &'static str,
    pub threshold_rule: &'static str,
}

pub fn run(cfg: &RunConfig) -> Result<RunDoc> {
    cfg.validate()?;
    let h = cfg.hamiltonian()?;
    let within_cap = h.qubits() <= cfg.oracle_cap;
    let needs_reference = cfg.rounds == Rounds::Auto || cfg.threshold.is_none();
    let reference = if needs_reference {
        Some(
            reference_worlds(
                &cfg.circuit,
                cfg.claim,
                cfg.weights,
                cfg.normalization,
                cfg.oracle_cap,
            )?
            .points,
        )
    } else if within_cap {
        reference_worlds(
            &cfg.circuit,
            cfg.claim,
            cfg.weights,
            cfg.normalization,
            cfg.oracle_cap,
        )
        .ok()
        .map(|w| w.points)
    } else {
        None
    };
    let gap = reference.as_ref().map(|r| r.gap);

    let (n_rounds, rounds_rule) = match cfg.rounds {
        Rounds::Fixed(n) => (n, ROUNDS_RULE_FIXED),
        Rounds::Auto => {
            let g = gap.expect("reference computed for auto rounds");
            let n = amplification_rounds(g, cfg.epsilon).map_err(|_| {
                Error::InvalidArgument(format!(
                    "cannot choose rounds automatically: reference gap is {g}, the instance does not separate; pass --rounds N"
                ))
            })?;
            (n, ROUNDS_RULE_AUTO)
        }
    };
    let (threshold, threshold_rule) = match (cfg.threshold, &reference) {
        (Some(t), _) => (t, THRESHOLD_RULE_FIXED),
        (None, Some(r)) => (r.threshold, THRESHOLD_RULE_MIDPOINT),
        (None, None) => unreachable!("reference computed when no threshold is given"),
    };

    let protocol = ProtocolConfig {
        rounds: n_rounds,
        seed: cfg.seed,
        normalization: cfg.normalization,
        threshold,
    };
    let report = run_with_strategy(
        &h,
        &cfg.strategy,
        &cfg.circuit,
        cfg.claim,
        &protocol,
        cfg.oracle_cap,
    )?;
    let history = energy(
        &h,
        &history_state(h.branch_circuit().expect("built from a circuit"))?,
    )?;
    let ground = if within_cap {
        Some(ground_energy(&h, cfg.oracle_cap)?.energy)
    } else {
        None
    };

    Ok(RunDoc {
        circuit: cfg.circuit_label.clone(),
        claim: cfg.claim,
        strategy: cfg.strategy.to_string(),
        n_rounds,
        seed: cfg.seed,
        accept_count: report.accept_count,
        p_hat: report.p_hat,
        p_exact: report.p_exact,
        threshold,
        verdict: report.verdict,
        term_table_ref: term_table_ref(&h),
        energies: Energies { ground, history },
        normalization: cfg.normalization,
        gap,
        epsilon: (cfg.rounds == Rounds::Auto).then_some(cfg.epsilon),
        rounds_rule,
        threshold_rule,
    })
}

impl RunDoc {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "circuit        {}", self.circuit).unwrap();
        writeln!(out, "claim          {}", self.claim).unwrap();
        writeln!(out, "strategy       {}", self.strategy).unwrap();
        writeln!(
            out,
            "rounds         {} ({})",
            self.n_rounds, self.rounds_rule
        )
        .unwrap();
        writeln!(out, "seed           {}", self.seed).unwrap();
        writeln!(out, "accepted       {}", self.accept_count).unwrap();
        writeln!(out, "p_hat          {:.6}", self.p_hat).unwrap();
        writeln!(out, "p_exact        {:.6}", self.p_exact).unwrap();
        writeln!(
            out,
            "threshold      {:.6} ({})",
            self.threshold, self.threshold_rule
        )
        .unwrap();
        if let Some(g) = self.gap {
            writeln!(out, "gap            {g:.6}").unwrap();
        }
        writeln!(out, "normalization  {}", self.normalization.as_str()).unwrap();
        writeln!(out, "verdict        {}", self.verdict).unwrap();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecideDoc {
    pub circuit: String,
    pub strategy: String,
    pub seed: u64,
    pub member: RunDoc,
    pub nonmember: RunDoc,
}

/// The same run under both claims.
pub fn decide(cfg: &RunConfig) -> Result<DecideDoc> {
    let with_claim = |claim| {
        let mut c = cfg.clone();
        c.claim = claim;
        run(&c)
    };
    Ok(DecideDoc {
        circuit: cfg.circuit_label.clone(),
        strategy: cfg.strategy.to_string(),
        seed: cfg.seed,
        member: with_claim(Claim::Member)?,
        nonmember: with_claim(Claim::Nonmember)?,
    })
}

impl DecideDoc {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "circuit   {}", self.circuit).unwrap();
        writeln!(out, "strategy  {}", self.strategy).unwrap();
        writeln!(out, "seed      {}", self.seed).unwrap();
        writeln!(
            out,
            "{:<10} {:>8} {:>10} {:>10} {:>10}  verdict",
            "claim", "rounds", "p_hat", "p_exact", "threshold"
        )
        .unwrap();
        for r in [&self.member, &self.nonmember] {
            writeln!(
                out,
                "{:<10} {:>8} {:>10.6} {:>10.6} {:>10.6}  {}",
                r.claim.as_str(),
                r.n_rounds,
                r.p_hat,
                r.p_exact,
                r.threshold,
                r.verdict
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDoc {
    pub circuit: String,
    pub claim: Claim,
    pub qubits: usize,
    pub terms: usize,
    pub passed: bool,
    pub checks: Vec<OracleCheck>,
}

pub fn oracle(cfg: &RunConfig, fault: Option<Fault>) -> Result<OracleDoc> {
    let r = run_oracle_suite(&cfg.circuit, cfg.claim, cfg.weights, cfg.oracle_cap, fault)?;
    Ok(OracleDoc {
        circuit: cfg.circuit_label.clone(),
        claim: cfg.claim,
        qubits: r.qubits,
        terms: r.terms,
        passed: r.passed(),
        checks: r.checks,
    })
}

impl OracleDoc {
    pub fn first_failure(&self) -> Option<&OracleCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "circuit  {} ({}, {} qubits, {} terms)",
            self.circuit, self.claim, self.qubits, self.terms
        )
        .unwrap();
        for c in &self.checks {
            writeln!(
                out,
                "{:<4} {:<24} {}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.detail
            )
            .unwrap();
        }
        writeln!(
            out,
            "{}",
            if self.passed {
                "all checks passed"
            } else {
                "oracle suite failed"
            }
        )
        .unwrap();
        out
    }
}

/// Serializes a document to the JSON contract, newline terminated.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}
