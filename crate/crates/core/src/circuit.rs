//! Circuit representation and the line-oriented circuit format.
//!
//! ```text
//! qubits <n>          # required, first statement
//! witness <w>         # optional, defaults to 0
//! output <i>          # required
//! X i | Z i | H i | CNOT i j | CZ i j | TOFFOLI i j k
//! ```
//!
//! `#` starts a comment. Witness qubits are appended after the data qubits,
//! so gate and output indices range over `0..n + w`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, ParseError, ParseErrorKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    Z,
    H,
    Cnot,
    Cz,
    Toffoli,
}

impl GateKind {
    pub const ALL: [GateKind; 6] = [
        GateKind::X,
        GateKind::Z,
        GateKind::H,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Toffoli,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::X | GateKind::Z | GateKind::H => 1,
            GateKind::Cnot | GateKind::Cz => 2,
            GateKind::Toffoli => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Toffoli => "TOFFOLI",
        }
    }

    /// Dense row-major matrix of the gate on its own targets, with
    /// `targets[0]` as the least-significant bit of the local index.
    /// For CNOT and TOFFOLI the last target is the one flipped.
    pub fn matrix(self) -> Vec<f64> {
        let dim = 1usize << self.arity();
        let mut m = vec![0.0; dim * dim];
        match self {
            GateKind::X => {
                m[1] = 1.0;
                m[2] = 1.0;
            }
            GateKind::Z => {
                m[0] = 1.0;
                m[3] = -1.0;
            }
            GateKind::H => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                m.copy_from_slice(&[r, r, r, -r]);
            }
            GateKind::Cnot | GateKind::Toffoli => {
                let controls = (1usize << (self.arity() - 1)) - 1;
                let target = 1usize << (self.arity() - 1);
                for col in 0..dim {
                    let row = if col & controls == controls {
                        col ^ target
                    } else {
                        col
                    };
                    m[row * dim + col] = 1.0;
                }
            }
            GateKind::Cz => {
                for i in 0..dim {
                    m[i * dim + i] = if i == 3 { -1.0 } else { 1.0 };
                }
            }
        }
        m
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        GateKind::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: &[usize]) -> Result<Self> {
        let distinct = targets
            .iter()
            .enumerate()
            .all(|(i, t)| !targets[..i].contains(t));
        if targets.len() != kind.arity() || !distinct {
            return Err(Error::InvalidTargets {
                kind: kind.name(),
                expected: kind.arity(),
                found: targets.to_vec(),
            });
        }
        Ok(Gate {
            kind,
            targets: targets.to_vec(),
        })
    }

    pub fn x(q: usize) -> Self {
        Gate {
            kind: GateKind::X,
            targets: vec![q],
        }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

/// Which answer the prover claims for the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Claim {
    Member,
    Nonmember,
}

impl Claim {
    pub fn opposite(self) -> Self {
        match self {
            Claim::Member => Claim::Nonmember,
            Claim::Nonmember => Claim::Member,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Claim::Member => "member",
            Claim::Nonmember => "nonmember",
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "member" => Ok(Claim::Member),
            "nonmember" => Ok(Claim::Nonmember),
            other => Err(Error::InvalidArgument(format!(
                "unknown claim `{other}` (expected member|nonmember)"
            ))),
        }
    }
}

/// An immutable, validated gate sequence over `data + witness` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    data: usize,
    witness: usize,
    gates: Vec<Gate>,
    output: usize,
}

impl Circuit {
    /// Validates indices and pads an empty gate list with `X 0; X 0`.
    pub fn new(data: usize, witness: usize, gates: Vec<Gate>, output: usize) -> Result<Self> {
        let qubits = data + witness;
        if data == 0 {
            return Err(Error::InvalidArgument(
                "circuit needs at least one data qubit".into(),
            ));
        }
        if output >= qubits {
            return Err(Error::QubitOutOfRange {
                index: output,
                qubits,
            });
        }
        if let Some(&index) = gates
            .iter()
            .flat_map(|g| g.targets.iter())
            .find(|&&t| t >= qubits)
        {
            return Err(Error::QubitOutOfRange { index, qubits });
        }
        let gates = if gates.is_empty() {
            vec![Gate::x(0), Gate::x(0)]
        } else {
            gates
        };
        Ok(Circuit {
            data,
            witness,
            gates,
            output,
        })
    }

    pub fn data_qubits(&self) -> usize {
        self.data
    }

    pub fn witness_qubits(&self) -> usize {
        self.witness
    }

    /// `n + w`.
    pub fn qubits(&self) -> usize {
        self.data + self.witness
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> usize {
        self.output
    }

    /// Number of clock steps, one per gate.
    pub fn steps(&self) -> usize {
        self.gates.len()
    }

    /// Appends `w` idle witness qubits after the existing register.
    pub fn with_witness_register(&self, w: usize) -> Circuit {
        Circuit {
            witness: self.witness + w,
            ..self.clone()
        }
    }

    /// Appends an X on the output qubit, flipping the accepted answer.
    pub fn complement(&self) -> Circuit {
        let mut c = self.clone();
        c.gates.push(Gate::x(self.output));
        c
    }

    /// The circuit whose output-1 probability `claim` asserts is high.
    pub fn branch(&self, claim: Claim) -> Circuit {
        match claim {
            Claim::Member => self.clone(),
            Claim::Nonmember => self.complement(),
        }
    }

    /// Deterministic rendering in the circuit format.
    pub fn serialize(&self) -> String {
        let mut out = format!("qubits {}\n", self.data);
        if self.witness > 0 {
            out.push_str(&format!("witness {}\n", self.witness));
        }
        out.push_str(&format!("output {}\n", self.output));
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl FromStr for Circuit {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        parse_circuit(s)
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in code.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &code[s..i],
                    column: code[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &code[s..],
            column: code[..s].chars().count() + 1,
        });
    }
    tokens
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

fn number(line: usize, tok: &Token<'_>) -> std::result::Result<usize, ParseError> {
    tok.text.parse().map_err(|_| {
        err(
            line,
            tok.column,
            ParseErrorKind::Syntax(format!(
                "expected a non-negative integer, found `{}`",
                tok.text
            )),
        )
    })
}

fn single_argument<'a>(
    line: usize,
    tokens: &'a [Token<'a>],
) -> std::result::Result<&'a Token<'a>, ParseError> {
    match tokens {
        [_, arg] => Ok(arg),
        [head] => Err(err(
            line,
            head.column + head.text.len(),
            ParseErrorKind::Syntax(format!("`{}` expects one argument", head.text)),
        )),
        [head, _, extra, ..] => Err(err(
            line,
            extra.column,
            ParseErrorKind::Syntax(format!("`{}` expects one argument", head.text)),
        )),
        [] => unreachable!("blank lines are skipped"),
    }
}

/// A parsed gate line: line number, `(value, column)` per target, kind.
type GateLine = (usize, Vec<(usize, usize)>, GateKind);

/// Parses and validates a circuit document.
pub fn parse_circuit(text: &str) -> std::result::Result<Circuit, ParseError> {
    let mut data: Option<usize> = None;
    let mut witness: Option<usize> = None;
    let mut output: Option<(usize, usize, usize)> = None;
    let mut gates: Vec<GateLine> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let tokens = tokenize(raw);
        let Some(head) = tokens.first() else { continue };

        if data.is_none() {
            if head.text != "qubits" {
                return Err(err(line, head.column, ParseErrorKind::MissingQubits));
            }
            let n = number(line, single_argument(line, &tokens)?)?;
            if n == 0 {
                return Err(err(
                    line,
                    tokens[1].column,
                    ParseErrorKind::Syntax("`qubits` must be at least 1".into()),
                ));
            }
            data = Some(n);
            continue;
        }

        match head.text {
            "qubits" => {
                return Err(err(
                    line,
                    head.column,
                    ParseErrorKind::Syntax("duplicate `qubits`".into()),
                ))
            }
            "witness" | "output" if !gates.is_empty() => {
                return Err(err(
                    line,
                    head.column,
                    ParseErrorKind::Syntax(format!("`{}` must precede the gate list", head.text)),
                ))
            }
            "witness" => {
                if witness.is_some() {
                    return Err(err(
                        line,
                        head.column,
                        ParseErrorKind::Syntax("duplicate `witness`".into()),
                    ));
                }
                witness = Some(number(line, single_argument(line, &tokens)?)?);
            }
            "output" => {
                if output.is_some() {
                    return Err(err(
                        line,
                        head.column,
                        ParseErrorKind::Syntax("duplicate `output`".into()),
                    ));
                }
                let arg = single_argument(line, &tokens)?;
                output = Some((number(line, arg)?, line, arg.column));
            }
            name => {
                let kind: GateKind = name.parse().map_err(|_| {
                    err(
                        line,
                        head.column,
                        ParseErrorKind::UnknownGate(name.to_string()),
                    )
                })?;
                let args = &tokens[1..];
                if args.len() != kind.arity() {
                    let column = args.get(kind.arity()).map(|t| t.column).unwrap_or_else(|| {
                        raw.split('#')
                            .next()
                            .unwrap_or("")
                            .trim_end()
                            .chars()
                            .count()
                            + 1
                    });
                    return Err(err(
                        line,
                        column,
                        ParseErrorKind::Syntax(format!(
                            "{} takes {} qubit argument(s), found {}",
                            kind.name(),
                            kind.arity(),
                            args.len()
                        )),
                    ));
                }
                let mut targets = Vec::with_capacity(args.len());
                for tok in args {
                    let q = number(line, tok)?;
                    if targets.iter().any(|&(t, _)| t == q) {
                        return Err(err(line, tok.column, ParseErrorKind::DuplicateTargets));
                    }
                    targets.push((q, tok.column));
                }
                gates.push((line, targets, kind));
            }
        }
    }

    let Some(data) = data else {
        return Err(err(last_line.max(1), 1, ParseErrorKind::MissingQubits));
    };
    let witness = witness.unwrap_or(0);
    let qubits = data + witness;
    let Some((output, out_line, out_col)) = output else {
        return Err(err(last_line + 1, 1, ParseErrorKind::MissingOutput));
    };
    if output >= qubits {
        return Err(err(
            out_line,
            out_col,
            ParseErrorKind::QubitOutOfRange {
                index: output,
                qubits,
            },
        ));
    }

    let mut built = Vec::with_capacity(gates.len());
    for (line, targets, kind) in gates {
        if let Some(&(index, column)) = targets.iter().find(|(q, _)| *q >= qubits) {
            return Err(err(
                line,
                column,
                ParseErrorKind::QubitOutOfRange { index, qubits },
            ));
        }
        let idx: Vec<usize> = targets.iter().map(|(q, _)| *q).collect();
        built.push(Gate { kind, targets: idx });
    }

    // All indices were checked above, so construction cannot fail.
    Ok(Circuit::new(data, witness, built, output).expect("validated circuit"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Circuit {
        parse_circuit(s).unwrap()
    }

    #[test]
    fn parses_single_hadamard() {
        let c = parse("qubits 1\noutput 0\nH 0");
        assert_eq!(c.data_qubits(), 1);
        assert_eq!(c.witness_qubits(), 0);
        assert_eq!(c.output(), 0);
        assert_eq!(c.gates(), &[Gate::new(GateKind::H, &[0]).unwrap()]);
        assert_eq!(c.steps(), 1);
    }

    #[test]
    fn parses_toffoli_circuit() {
        let c = parse("qubits 3\noutput 2\nX 0\nX 1\nTOFFOLI 0 1 2");
        assert_eq!(c.data_qubits(), 3);
        assert_eq!(c.steps(), 3);
        assert_eq!(c.gates()[2].kind(), GateKind::Toffoli);
        assert_eq!(c.gates()[2].targets(), &[0, 1, 2]);
        assert_eq!(c.output(), 2);
    }

    #[test]
    fn duplicate_targets_reported_on_line_three() {
        let e = parse_circuit("qubits 1\noutput 0\nCNOT 0 0").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.column, 8);
        assert_eq!(e.kind, ParseErrorKind::DuplicateTargets);
    }

    #[test]
    fn diagnostics() {
        let e = parse_circuit("qubits 2\noutput 0\nFOO 1").unwrap_err();
        assert_eq!((e.line, e.column), (3, 1));
        assert_eq!(e.kind, ParseErrorKind::UnknownGate("FOO".into()));

        let e = parse_circuit("qubits 2\noutput 0\nX 0\n  CZ 0 5").unwrap_err();
        assert_eq!((e.line, e.column), (4, 8));
        assert_eq!(
            e.kind,
            ParseErrorKind::QubitOutOfRange {
                index: 5,
                qubits: 2
            }
        );

        let e = parse_circuit("qubits 1\nH 0").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingOutput);

        let e = parse_circuit("output 0\nqubits 1").unwrap_err();
        assert_eq!((e.line, e.kind), (1, ParseErrorKind::MissingQubits));

        let e = parse_circuit("qubits x").unwrap_err();
        assert_eq!((e.line, e.column), (1, 8));

        let e = parse_circuit("qubits 1\noutput 0\nCNOT 0").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));

        let e = parse_circuit("qubits 1\noutput 3").unwrap_err();
        assert_eq!((e.line, e.column), (2, 8));

        let e = parse_circuit("qubits 1\noutput 0\nX 0\nwitness 1").unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn comments_and_witness() {
        let c =
            parse("# header\nqubits 2 # data\nwitness 1\n\noutput 1\nCNOT 0 2 # into witness\n");
        assert_eq!(c.qubits(), 3);
        assert_eq!(c.gates()[0].targets(), &[0, 2]);
    }

    #[test]
    fn empty_circuit_is_padded() {
        let c = parse("qubits 1\noutput 0\n");
        assert_eq!(c.gates(), &[Gate::x(0), Gate::x(0)]);
        assert_eq!(c.steps(), 2);
    }

    #[test]
    fn witness_register_is_idle() {
        let c = parse("qubits 1\noutput 0\nH 0");
        assert_eq!(c.with_witness_register(0), c);
        let w = c.with_witness_register(2);
        assert_eq!(w.qubits(), 3);
        assert_eq!(w.data_qubits(), 1);
        assert_eq!(w.witness_qubits(), 2);
        assert_eq!(w.gates(), c.gates());
        assert_eq!(w.output(), 0);
    }

    #[test]
    fn complement_appends_output_flip() {
        let c = parse("qubits 2\noutput 1\nH 0\nCNOT 0 1");
        let d = c.complement();
        assert_eq!(d.steps(), 3);
        assert_eq!(d.gates().last(), Some(&Gate::x(1)));
        assert_eq!(c.branch(Claim::Nonmember), d);
        assert_eq!(c.branch(Claim::Member), c);
    }

    #[test]
    fn gate_matrices_are_real_symmetric_involutions() {
        for kind in GateKind::ALL {
            let m = kind.matrix();
            let dim = 1 << kind.arity();
            for i in 0..dim {
                for j in 0..dim {
                    assert!(
                        (m[i * dim + j] - m[j * dim + i]).abs() < 1e-15,
                        "{kind} not symmetric"
                    );
                    let sq: f64 = (0..dim).map(|k| m[i * dim + k] * m[k * dim + j]).sum();
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((sq - id).abs() < 1e-12, "{kind} not involutory");
                }
            }
        }
    }

    #[test]
    fn gate_validation() {
        assert!(Gate::new(GateKind::Cnot, &[0]).is_err());
        assert!(Gate::new(GateKind::Toffoli, &[0, 1, 1]).is_err());
        assert!(Circuit::new(1, 0, vec![Gate::x(1)], 0).is_err());
        assert!(Circuit::new(1, 0, vec![], 1).is_err());
    }
}
