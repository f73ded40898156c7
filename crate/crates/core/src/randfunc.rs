//! Random expression-tree objective functions.
//!
//! Trees mix four binary operators, eight unary operators, variables and
//! constants. Node-kind selection is 40% binary / 30% unary / 30% terminal
//! (terminals forced at `max_depth`, suppressed below `min_depth`);
//! terminals split 70% variable / 30% constant. All operators are protected
//! so that evaluation is finite everywhere: division and logarithm guard
//! against tiny denominators, `exp` clamps its argument, `sqrt` takes the
//! absolute value, and every node output saturates at `±1e100`.
//!
//! Generated trees are filtered for degeneracy: candidates whose normalized
//! values on the filter design have fewer than 10 distinct values or a
//! standard deviation below 1e-6 are rejected and regenerated from a derived
//! sub-seed.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::sampling::{normalize_values, sobol_points};
use std::fmt::Write as _;

/// Hard ceiling on node output magnitude; keeps deep product/exp chains
/// finite without changing normalized landscapes.
const VALUE_CAP: f64 = 1e100;
/// Denominator / logarithm guard.
const TINY: f64 = 1e-9;
/// Argument clamp for exp.
const EXP_CLAMP: f64 = 50.0;
/// Rejection budget for the degeneracy filter.
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Square,
    Neg,
}

const BINARY_OPS: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];
const UNARY_OPS: [UnaryOp; 8] = [
    UnaryOp::Sin,
    UnaryOp::Cos,
    UnaryOp::Exp,
    UnaryOp::Log,
    UnaryOp::Sqrt,
    UnaryOp::Abs,
    UnaryOp::Square,
    UnaryOp::Neg,
];

impl BinaryOp {
    fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
        }
    }
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
            UnaryOp::Square => "square",
            UnaryOp::Neg => "neg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Binary(BinaryOp, Box<ExprNode>, Box<ExprNode>),
    Unary(UnaryOp, Box<ExprNode>),
    Var(usize),
    Const(f64),
}

impl ExprNode {
    fn depth(&self) -> usize {
        match self {
            ExprNode::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
            ExprNode::Unary(_, c) => 1 + c.depth(),
            _ => 1,
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            ExprNode::Binary(_, l, r) => l.max_var().max(r.max_var()),
            ExprNode::Unary(_, c) => c.max_var(),
            ExprNode::Var(i) => Some(*i),
            ExprNode::Const(_) => None,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let v = match self {
            ExprNode::Binary(op, l, r) => {
                let a = l.eval(x);
                let b = r.eval(x);
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b.abs() > TINY {
                            a / b
                        } else {
                            1.0
                        }
                    }
                }
            }
            ExprNode::Unary(op, c) => {
                let a = c.eval(x);
                match op {
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Exp => a.min(EXP_CLAMP).exp(),
                    UnaryOp::Log => {
                        if a.abs() > TINY {
                            a.abs().ln()
                        } else {
                            0.0
                        }
                    }
                    UnaryOp::Sqrt => a.abs().sqrt(),
                    UnaryOp::Abs => a.abs(),
                    UnaryOp::Square => a * a,
                    UnaryOp::Neg => -a,
                }
            }
            ExprNode::Var(i) => x[*i],
            ExprNode::Const(c) => *c,
        };
        v.clamp(-VALUE_CAP, VALUE_CAP)
    }
}

/// A generated objective function over `[0,1]^d` (or any rescaled box).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionExpr {
    pub root: ExprNode,
    pub d: usize,
    pub depth: usize,
}

/// Parameters for the random tree generator.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub d: usize,
    pub seed: u64,
    pub max_depth: usize,
    pub min_depth: usize,
    pub constant_range: (f64, f64),
}

impl GeneratorConfig {
    pub fn new(d: usize, seed: u64) -> Self {
        GeneratorConfig {
            d,
            seed,
            max_depth: 12,
            min_depth: 2,
            constant_range: (-5.0, 5.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                message: "dimension must be at least 1".into(),
            });
        }
        if self.min_depth > self.max_depth {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                message: "min_depth exceeds max_depth".into(),
            });
        }
        if !(self.constant_range.0 < self.constant_range.1) {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                message: "empty constant range".into(),
            });
        }
        Ok(())
    }
}

fn gen_node(rng: &mut SplitMix64, depth: usize, cfg: &GeneratorConfig) -> ExprNode {
    enum Kind {
        Binary,
        Unary,
        Terminal,
    }
    let kind = if depth >= cfg.max_depth {
        Kind::Terminal
    } else if depth < cfg.min_depth {
        // non-terminal forced; keep the 40:30 binary/unary ratio
        if rng.next_f64() < 4.0 / 7.0 {
            Kind::Binary
        } else {
            Kind::Unary
        }
    } else {
        let roll = rng.next_f64();
        if roll < 0.4 {
            Kind::Binary
        } else if roll < 0.7 {
            Kind::Unary
        } else {
            Kind::Terminal
        }
    };
    match kind {
        Kind::Binary => {
            let op = BINARY_OPS[rng.below(4)];
            let left = gen_node(rng, depth + 1, cfg);
            let right = gen_node(rng, depth + 1, cfg);
            ExprNode::Binary(op, Box::new(left), Box::new(right))
        }
        Kind::Unary => {
            let op = UNARY_OPS[rng.below(8)];
            ExprNode::Unary(op, Box::new(gen_node(rng, depth + 1, cfg)))
        }
        Kind::Terminal => {
            if rng.next_f64() < 0.7 {
                ExprNode::Var(rng.below(cfg.d))
            } else {
                ExprNode::Const(rng.uniform(cfg.constant_range.0, cfg.constant_range.1))
            }
        }
    }
}

fn passes_filter(expr: &FunctionExpr, points: &[f64], d: usize) -> bool {
    let raw = match evaluate(expr, points, d) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let normed = match normalize_values(&raw) {
        Ok(v) => v.values,
        Err(_) => return false,
    };
    let mut sorted = normed.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    if sorted.len() < 10 {
        return false;
    }
    let n = normed.len() as f64;
    let mean = normed.iter().sum::<f64>() / n;
    let var = normed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt() >= 1e-6
}

/// Generate one non-degenerate function, filtering on the given design
/// points. Attempt `k` regenerates from `derive_seed([seed, k])`. Also
/// returns how many candidates the filter rejected first.
pub fn generate_counted(cfg: &GeneratorConfig, points: &[f64]) -> Result<(FunctionExpr, usize)> {
    cfg.validate()?;
    for attempt in 0..MAX_REJECTIONS {
        let mut rng = SplitMix64::new(derive_seed(&[cfg.seed, attempt as u64]));
        let root = gen_node(&mut rng, 1, cfg);
        let depth = root.depth();
        let expr = FunctionExpr { root, d: cfg.d, depth };
        if passes_filter(&expr, points, cfg.d) {
            return Ok((expr, attempt));
        }
    }
    Err(Error::GeneratorExhausted { attempts: MAX_REJECTIONS })
}

/// Generate one non-degenerate function, filtering on the given design
/// points.
pub fn generate_filtered(cfg: &GeneratorConfig, points: &[f64]) -> Result<FunctionExpr> {
    Ok(generate_counted(cfg, points)?.0)
}

/// Generate one non-degenerate function, filtered on the default design
/// (the 256-point Sobol set in `[0,1]^d`).
pub fn generate(cfg: &GeneratorConfig) -> Result<FunctionExpr> {
    cfg.validate()?;
    let doe = sobol_points(8, cfg.d)?;
    generate_filtered(cfg, doe.as_slice())
}

/// Evaluate an expression on an n×d row-major point matrix.
pub fn evaluate(expr: &FunctionExpr, points: &[f64], d: usize) -> Result<Vec<f64>> {
    if d != expr.d || points.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            context: "evaluate",
            expected: expr.d,
            actual: d,
        });
    }
    Ok(points.chunks_exact(d).map(|row| expr.root.eval(row)).collect())
}

/// Prefix-notation text form, e.g. `(add x0 0.5)`. Constants use Rust's
/// shortest round-trip float formatting, which preserves the exact value.
pub fn serialize(expr: &FunctionExpr) -> String {
    let mut out = String::new();
    write_node(&expr.root, &mut out);
    out
}

fn write_node(node: &ExprNode, out: &mut String) {
    match node {
        ExprNode::Binary(op, l, r) => {
            let _ = write!(out, "({} ", op.name());
            write_node(l, out);
            out.push(' ');
            write_node(r, out);
            out.push(')');
        }
        ExprNode::Unary(op, c) => {
            let _ = write!(out, "({} ", op.name());
            write_node(c, out);
            out.push(')');
        }
        ExprNode::Var(i) => {
            let _ = write!(out, "x{i}");
        }
        ExprNode::Const(c) => {
            let _ = write!(out, "{c}");
        }
    }
}

/// Parse prefix text; the dimension is inferred as `max variable index + 1`
/// (at least 1).
pub fn parse(text: &str) -> Result<FunctionExpr> {
    let root = Parser::new(text).parse_root()?;
    let d = root.max_var().map_or(1, |m| m + 1);
    let depth = root.depth();
    Ok(FunctionExpr { root, d, depth })
}

/// Parse prefix text with an explicit dimension; variable indices must be
/// below `d`.
pub fn parse_with_dim(text: &str, d: usize) -> Result<FunctionExpr> {
    let root = Parser::new(text).parse_root()?;
    if let Some(m) = root.max_var() {
        if m >= d {
            return Err(Error::ParseError {
                position: 0,
                message: format!("variable x{m} out of range for dimension {d}"),
            });
        }
    }
    let depth = root.depth();
    Ok(FunctionExpr { root, d, depth })
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

#[derive(Debug)]
enum Token<'a> {
    Open(usize),
    Close(usize),
    Atom(usize, &'a str),
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { text, pos: 0 }
    }

    fn err<T>(&self, position: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::ParseError { position, message: message.into() })
    }

    fn next_token(&mut self) -> Result<Option<Token<'a>>> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        match bytes[start] {
            b'(' => {
                self.pos += 1;
                Ok(Some(Token::Open(start)))
            }
            b')' => {
                self.pos += 1;
                Ok(Some(Token::Close(start)))
            }
            _ => {
                let mut end = start;
                while end < bytes.len()
                    && !bytes[end].is_ascii_whitespace()
                    && bytes[end] != b'('
                    && bytes[end] != b')'
                {
                    end += 1;
                }
                self.pos = end;
                Ok(Some(Token::Atom(start, &self.text[start..end])))
            }
        }
    }

    fn parse_root(&mut self) -> Result<ExprNode> {
        let node = self.parse_expr()?;
        if let Some(tok) = self.next_token()? {
            let pos = match tok {
                Token::Open(p) | Token::Close(p) | Token::Atom(p, _) => p,
            };
            return self.err(pos, "trailing input after expression");
        }
        Ok(node)
    }

    fn parse_expr(&mut self) -> Result<ExprNode> {
        match self.next_token()? {
            None => self.err(self.pos, "unexpected end of input"),
            Some(Token::Close(p)) => self.err(p, "unexpected ')'"),
            Some(Token::Atom(p, s)) => self.parse_atom(p, s),
            Some(Token::Open(open_pos)) => {
                let (op_pos, op) = match self.next_token()? {
                    Some(Token::Atom(p, s)) => (p, s),
                    Some(Token::Close(p)) => return self.err(p, "empty application"),
                    Some(Token::Open(p)) => return self.err(p, "operator expected"),
                    None => return self.err(self.pos, "unexpected end of input"),
                };
                let arity = operator_arity(op);
                let arity = match arity {
                    Some(a) => a,
                    None => return self.err(op_pos, format!("unknown operator {op:?}")),
                };
                let mut args = Vec::with_capacity(arity);
                for _ in 0..arity {
                    // peek for premature ')'
                    let save = self.pos;
                    match self.next_token()? {
                        Some(Token::Close(_)) => {
                            return self.err(
                                op_pos,
                                format!("operator {op} expects {arity} argument(s)"),
                            );
                        }
                        None => return self.err(self.pos, "unexpected end of input"),
                        _ => {
                            self.pos = save;
                            args.push(self.parse_expr()?);
                        }
                    }
                }
                match self.next_token()? {
                    Some(Token::Close(_)) => {}
                    Some(Token::Atom(p, _)) | Some(Token::Open(p)) => {
                        return self.err(
                            p,
                            format!("operator {op} expects {arity} argument(s)"),
                        );
                    }
                    None => return self.err(self.pos, "missing ')'"),
                }
                let node = match arity {
                    1 => {
                        let op = UNARY_OPS.iter().find(|o| o.name() == op).unwrap();
                        ExprNode::Unary(*op, Box::new(args.pop().unwrap()))
                    }
                    _ => {
                        let op = BINARY_OPS.iter().find(|o| o.name() == op).unwrap();
                        let right = args.pop().unwrap();
                        let left = args.pop().unwrap();
                        ExprNode::Binary(*op, Box::new(left), Box::new(right))
                    }
                };
                let _ = open_pos;
                Ok(node)
            }
        }
    }

    fn parse_atom(&self, pos: usize, s: &str) -> Result<ExprNode> {
        if let Some(rest) = s.strip_prefix('x') {
            if let Ok(i) = rest.parse::<usize>() {
                return Ok(ExprNode::Var(i));
            }
        }
        match s.parse::<f64>() {
            Ok(c) if c.is_finite() => Ok(ExprNode::Const(c)),
            _ => self.err(pos, format!("expected variable or constant, got {s:?}")),
        }
    }
}

fn operator_arity(name: &str) -> Option<usize> {
    if BINARY_OPS.iter().any(|o| o.name() == name) {
        Some(2)
    } else if UNARY_OPS.iter().any(|o| o.name() == name) {
        Some(1)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr_from(text: &str, d: usize) -> FunctionExpr {
        parse_with_dim(text, d).unwrap()
    }

    #[test]
    fn seeded_generation_repeats() {
        let cfg = GeneratorConfig::new(2, 42);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_functions_pass_filter() {
        let cfg = GeneratorConfig::new(5, 7);
        let expr = generate(&cfg).unwrap();
        let doe = sobol_points(8, 5).unwrap();
        let vals = evaluate(&expr, doe.as_slice(), 5).unwrap();
        assert_eq!(vals.len(), 256);
        assert!(vals.iter().all(|v| v.is_finite()));
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max > min);
    }

    /// Population statistics of the generator on the default 2d design:
    /// nearly all surviving functions should carry visible signal.
    #[test]
    fn generator_population_variability() {
        let doe = sobol_points(8, 2).unwrap();
        let mut varied = 0usize;
        let total = 1000usize;
        for seed in 0..total as u64 {
            let cfg = GeneratorConfig::new(2, seed);
            let expr = generate_filtered(&cfg, doe.as_slice()).unwrap();
            let raw = evaluate(&expr, doe.as_slice(), 2).unwrap();
            let normed = normalize_values(&raw).unwrap().values;
            let mean = normed.iter().sum::<f64>() / normed.len() as f64;
            let var =
                normed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / normed.len() as f64;
            if var.sqrt() > 0.05 {
                varied += 1;
            }
        }
        assert!(varied >= 950, "only {varied}/1000 functions had std > 0.05");
    }

    #[test]
    fn evaluate_identity_terminal() {
        let expr = expr_from("x0", 2);
        let vals = evaluate(&expr, &[0.3, 0.9], 2).unwrap();
        assert_eq!(vals, vec![0.3]);
    }

    #[test]
    fn evaluate_sphere() {
        let expr = expr_from("(add (square x0) (square x1))", 2);
        let vals = evaluate(&expr, &[3.0, 4.0], 2).unwrap();
        assert_eq!(vals, vec![25.0]);
    }

    #[test]
    fn protected_division() {
        let expr = expr_from("(div 1 x0)", 1);
        assert_eq!(evaluate(&expr, &[0.0], 1).unwrap(), vec![1.0]);
        assert_eq!(evaluate(&expr, &[0.5], 1).unwrap(), vec![2.0]);
    }

    #[test]
    fn protected_unaries() {
        assert_eq!(evaluate(&expr_from("(log x0)", 1), &[0.0], 1).unwrap(), vec![0.0]);
        let v = evaluate(&expr_from("(log x0)", 1), &[-std::f64::consts::E], 1).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert_eq!(evaluate(&expr_from("(sqrt x0)", 1), &[-4.0], 1).unwrap(), vec![2.0]);
        let v = evaluate(&expr_from("(exp x0)", 1), &[1000.0], 1).unwrap();
        assert!((v[0] - 50f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let expr = expr_from("(add x0 x1)", 2);
        assert!(matches!(
            evaluate(&expr, &[1.0, 2.0, 3.0], 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_is_pure() {
        let cfg = GeneratorConfig::new(3, 99);
        let expr = generate(&cfg).unwrap();
        let doe = sobol_points(6, 3).unwrap();
        let a = evaluate(&expr, doe.as_slice(), 3).unwrap();
        let b = evaluate(&expr, doe.as_slice(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serialize_example() {
        let expr = expr_from("(add x0 0.5)", 1);
        assert_eq!(serialize(&expr), "(add x0 0.5)");
    }

    #[test]
    fn roundtrip_random_trees() {
        for seed in 0..50u64 {
            let mut cfg = GeneratorConfig::new(4, seed);
            cfg.max_depth = 12;
            let expr = generate(&cfg).unwrap();
            let text = serialize(&expr);
            let back = parse_with_dim(&text, 4).unwrap();
            assert_eq!(expr.root, back.root, "seed {seed}: {text}");
        }
    }

    #[test]
    fn parse_arity_error_position() {
        match parse("(sin)") {
            Err(Error::ParseError { position, .. }) => assert_eq!(position, 1),
            other => panic!("expected arity error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(matches!(parse("(frob x0 x1)"), Err(Error::ParseError { .. })));
        assert!(matches!(parse("(add x0"), Err(Error::ParseError { .. })));
        assert!(matches!(parse("(add x0 x1 x2)"), Err(Error::ParseError { .. })));
        assert!(matches!(parse(")"), Err(Error::ParseError { .. })));
        assert!(matches!(parse("(add x0 x1) junk"), Err(Error::ParseError { .. })));
        assert!(matches!(parse("zork"), Err(Error::ParseError { .. })));
    }

    /// Protected semantics keep every bounded-depth tree finite on a wide box.
    #[test]
    fn finiteness_on_wide_box() {
        let mut probe = SplitMix64::new(0xF1217);
        for seed in 0..200u64 {
            let cfg = GeneratorConfig::new(3, seed);
            let expr = generate(&cfg).unwrap();
            let points: Vec<f64> = (0..30).map(|_| probe.uniform(-10.0, 10.0)).collect();
            let vals = evaluate(&expr, &points, 3).unwrap();
            assert!(vals.iter().all(|v| v.is_finite()), "seed {seed}");
        }
    }

    #[test]
    fn deep_product_chains_saturate() {
        // square(square(...square(x)...)) would overflow without the cap
        let mut text = String::from("x0");
        for _ in 0..11 {
            text = format!("(square {text})");
        }
        let expr = parse_with_dim(&text, 1);
        let vals = evaluate(&expr.unwrap(), &[10.0], 1).unwrap();
        assert!(vals[0].is_finite());
        assert_eq!(vals[0], VALUE_CAP);
    }

    #[test]
    fn generator_exhaustion() {
        // A single-point filter design can never yield 10 distinct values.
        let cfg = GeneratorConfig::new(1, 0);
        assert!(matches!(
            generate_filtered(&cfg, &[0.5]),
            Err(Error::GeneratorExhausted { .. })
        ));
    }
}
