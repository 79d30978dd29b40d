//! Greechie orthogonality diagrams: named rays grouped into contexts of
//! three mutually orthogonal rays, with shared rays linking contexts.
//!
//! Diagrams are written in GDL, a line-oriented text format:
//!
//! ```text
//! # comment
//! ray d = (0, 1, 0)
//! ray e = (-1i, 0, 1)          # normalized on read
//! context blue = { d, e, z }
//! ```
//!
//! A component is `a`, `bi`, `a+bi` or `a-bi` with decimal literals.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Result;
use crate::ks::{context_of, KSOperator};
use crate::linalg::{projector, StateVector};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{col}: duplicate ray `{name}`")]
    DuplicateRay {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: duplicate context `{name}`")]
    DuplicateContext {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: context references undeclared ray `{name}`")]
    UndeclaredRay {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: context `{context}` must list 3 distinct rays, found {found}")]
    Arity {
        context: String,
        found: usize,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: ray `{name}` is the zero vector or not finite")]
    DegenerateRay {
        name: String,
        line: usize,
        col: usize,
    },
}

impl ParseError {
    /// 1-based `(line, column)` of the offending token.
    pub fn position(&self) -> (usize, usize) {
        match *self {
            ParseError::Syntax { line, col, .. }
            | ParseError::DuplicateRay { line, col, .. }
            | ParseError::DuplicateContext { line, col, .. }
            | ParseError::UndeclaredRay { line, col, .. }
            | ParseError::Arity { line, col, .. }
            | ParseError::DegenerateRay { line, col, .. } => (line, col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayDecl {
    pub name: String,
    /// Unit-norm components.
    pub components: [Complex64; 3],
    /// Factor applied to the written components to normalize them.
    pub scale: f64,
}

impl RayDecl {
    pub fn state(&self) -> StateVector {
        StateVector::new(self.components.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDecl {
    pub name: String,
    pub rays: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreechieDiagram {
    /// Declaration order.
    pub rays: Vec<RayDecl>,
    pub contexts: Vec<ContextDecl>,
}

impl GreechieDiagram {
    pub fn ray(&self, name: &str) -> Option<&RayDecl> {
        self.rays.iter().find(|r| r.name == name)
    }

    /// Rays that appear in two or more contexts, with the contexts using
    /// them, in ray declaration order.
    pub fn interlinks(&self) -> Vec<Interlink> {
        self.rays
            .iter()
            .filter_map(|r| {
                let contexts: Vec<String> = self
                    .contexts
                    .iter()
                    .filter(|c| c.rays.contains(&r.name))
                    .map(|c| c.name.clone())
                    .collect();
                (contexts.len() > 1).then(|| Interlink {
                    ray: r.name.clone(),
                    components: r.components,
                    contexts,
                })
            })
            .collect()
    }

    /// Renders the diagram as GDL. Components use shortest round-trip
    /// decimals, so `parse_diagram(&d.to_gdl())` reproduces `d`.
    pub fn to_gdl(&self) -> String {
        let mut out = String::new();
        for r in &self.rays {
            let [a, b, c] = r.components.map(format_component);
            let _ = writeln!(out, "ray {} = ({a}, {b}, {c})", r.name);
        }
        for c in &self.contexts {
            let [a, b, d] = &c.rays;
            let _ = writeln!(out, "context {} = {{ {a}, {b}, {d} }}", c.name);
        }
        out
    }
}

impl fmt::Display for GreechieDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_gdl())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interlink {
    pub ray: String,
    pub components: [Complex64; 3],
    pub contexts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationResidual {
    pub ray: String,
    pub residual: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityResidual {
    pub context: String,
    pub pair: [String; 2],
    /// `|⟨a|b⟩|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub normalization: Vec<NormalizationResidual>,
    pub residuals: Vec<OrthogonalityResidual>,
    pub interlinks: Vec<Interlink>,
    pub failures: Vec<String>,
}

pub fn parse_diagram(text: &str) -> std::result::Result<GreechieDiagram, ParseError> {
    let mut rays: Vec<RayDecl> = Vec::new();
    let mut contexts: Vec<ContextDecl> = Vec::new();
    let mut ray_index: HashMap<String, usize> = HashMap::new();

    for (line_no, line) in text.lines().enumerate() {
        let mut cur = Cursor::new(line, line_no + 1);
        cur.skip_ws();
        if cur.at_end() {
            continue;
        }
        let (kw_col, keyword) = cur.ident("`ray` or `context`")?;
        match keyword.as_str() {
            "ray" => {
                let (name_col, name) = cur.ident("ray name")?;
                cur.expect('=')?;
                cur.expect('(')?;
                let mut written = [Complex64::new(0.0, 0.0); 3];
                for (k, slot) in written.iter_mut().enumerate() {
                    if k > 0 {
                        cur.expect(',')?;
                    }
                    *slot = cur.complex()?;
                }
                cur.expect(')')?;
                cur.end_of_line()?;
                if ray_index.contains_key(&name) {
                    return Err(ParseError::DuplicateRay {
                        name,
                        line: line_no + 1,
                        col: name_col,
                    });
                }
                let norm = written.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if !norm.is_finite() || norm <= 0.0 {
                    return Err(ParseError::DegenerateRay {
                        name,
                        line: line_no + 1,
                        col: name_col,
                    });
                }
                let (components, scale) = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
                    (written, 1.0)
                } else {
                    let scale = 1.0 / norm;
                    (written.map(|z| z * scale), scale)
                };
                ray_index.insert(name.clone(), rays.len());
                rays.push(RayDecl {
                    name,
                    components,
                    scale,
                });
            }
            "context" => {
                let (name_col, name) = cur.ident("context name")?;
                cur.expect('=')?;
                cur.expect('{')?;
                let mut members: Vec<(usize, String)> = Vec::new();
                cur.skip_ws();
                if cur.peek() != Some('}') {
                    loop {
                        members.push(cur.ident("ray name")?);
                        cur.skip_ws();
                        if cur.peek() == Some(',') {
                            cur.bump();
                            continue;
                        }
                        break;
                    }
                }
                cur.expect('}')?;
                cur.end_of_line()?;
                if contexts.iter().any(|c| c.name == name) {
                    return Err(ParseError::DuplicateContext {
                        name,
                        line: line_no + 1,
                        col: name_col,
                    });
                }
                for (col, member) in &members {
                    if !ray_index.contains_key(member) {
                        return Err(ParseError::UndeclaredRay {
                            name: member.clone(),
                            line: line_no + 1,
                            col: *col,
                        });
                    }
                }
                let distinct = {
                    let mut names: Vec<&String> = members.iter().map(|(_, n)| n).collect();
                    names.sort();
                    names.dedup();
                    names.len()
                };
                if members.len() != 3 || distinct != 3 {
                    return Err(ParseError::Arity {
                        context: name,
                        found: distinct,
                        line: line_no + 1,
                        col: name_col,
                    });
                }
                let rays: [String; 3] = std::array::from_fn(|k| members[k].1.clone());
                contexts.push(ContextDecl { name, rays });
            }
            other => {
                return Err(ParseError::Syntax {
                    line: line_no + 1,
                    col: kw_col,
                    expected: "`ray` or `context`".into(),
                    found: format!("`{other}`"),
                })
            }
        }
    }
    Ok(GreechieDiagram { rays, contexts })
}

pub fn validate_diagram(d: &GreechieDiagram) -> ValidationReport {
    validate_diagram_with(d, &Tolerances::DEFAULT)
}

pub fn validate_diagram_with(d: &GreechieDiagram, tol: &Tolerances) -> ValidationReport {
    let mut failures = Vec::new();
    let normalization: Vec<NormalizationResidual> = d
        .rays
        .iter()
        .map(|r| NormalizationResidual {
            ray: r.name.clone(),
            residual: r.state().norm_deviation(),
            scale: r.scale,
        })
        .collect();
    for n in &normalization {
        if n.residual.is_nan() || n.residual >= tol.orthogonality {
            failures.push(format!("ray {} norm residual {:e}", n.ray, n.residual));
        }
    }

    let mut residuals = Vec::new();
    for c in &d.contexts {
        let members: Vec<Option<&RayDecl>> = c.rays.iter().map(|n| d.ray(n)).collect();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (Some(a), Some(b)) = (members[i], members[j]) else {
                continue;
            };
            let residual = a.state().inner(&b.state()).norm();
            if residual.is_nan() || residual >= tol.orthogonality {
                failures.push(format!(
                    "context {}: rays {} and {} not orthogonal (residual {:e})",
                    c.name, a.name, b.name, residual
                ));
            }
            residuals.push(OrthogonalityResidual {
                context: c.name.clone(),
                pair: [a.name.clone(), b.name.clone()],
                residual,
            });
        }
        for (name, m) in c.rays.iter().zip(&members) {
            if m.is_none() {
                failures.push(format!("context {}: undeclared ray {}", c.name, name));
            }
        }
    }

    ValidationReport {
        valid: failures.is_empty(),
        normalization,
        residuals,
        interlinks: d.interlinks(),
        failures,
    }
}

/// Builds a diagram from the contexts of the given operators. Rays closer
/// than the ray-match tolerance in projector distance are merged; a context
/// whose ray set is already present is dropped. Rays are named `r0, r1, …`
/// and contexts `c0, c1, …` in first-appearance order.
pub fn diagram_from_operators(ops: &[KSOperator]) -> Result<GreechieDiagram> {
    let tol = Tolerances::DEFAULT.ray_match;
    let mut rays: Vec<RayDecl> = Vec::new();
    let mut projectors = Vec::new();
    let mut contexts: Vec<ContextDecl> = Vec::new();
    for op in ops {
        let ctx = context_of(op)?;
        let mut names: Vec<String> = Vec::with_capacity(3);
        for ray in &ctx.rays {
            let p = projector(ray)?;
            let idx = match projectors.iter().position(|q| p.distance(q) < tol) {
                Some(i) => i,
                None => {
                    let amps = ray.amplitudes();
                    rays.push(RayDecl {
                        name: format!("r{}", rays.len()),
                        components: [amps[0], amps[1], amps[2]],
                        scale: 1.0,
                    });
                    projectors.push(p);
                    rays.len() - 1
                }
            };
            names.push(rays[idx].name.clone());
        }
        let mut key = names.clone();
        key.sort();
        let duplicate = contexts.iter().any(|c| {
            let mut other = c.rays.to_vec();
            other.sort();
            other == key
        });
        if !duplicate {
            contexts.push(ContextDecl {
                name: format!("c{}", contexts.len()),
                rays: [names[0].clone(), names[1].clone(), names[2].clone()],
            });
        }
    }
    Ok(GreechieDiagram { rays, contexts })
}

/// Whether two diagrams have the same rays (by projector distance) grouped
/// into the same contexts, ignoring names and order.
pub fn isomorphic(a: &GreechieDiagram, b: &GreechieDiagram, tol: f64) -> bool {
    if a.rays.len() != b.rays.len() || a.contexts.len() != b.contexts.len() {
        return false;
    }
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    for ra in &a.rays {
        let Ok(pa) = projector(&ra.state()) else {
            return false;
        };
        let hit = b.rays.iter().find(|rb| {
            projector(&rb.state())
                .map(|pb| pa.distance(&pb) < tol)
                .unwrap_or(false)
        });
        match hit {
            Some(rb) => {
                map.insert(&ra.name, &rb.name);
            }
            None => return false,
        }
    }
    fn sorted(mut names: Vec<&str>) -> Vec<&str> {
        names.sort();
        names
    }
    let mapped: Option<Vec<Vec<&str>>> = a
        .contexts
        .iter()
        .map(|c| {
            let names: Option<Vec<&str>> = c
                .rays
                .iter()
                .map(|n| map.get(n.as_str()).copied())
                .collect();
            names.map(sorted)
        })
        .collect();
    let Some(mut mapped) = mapped else {
        return false;
    };
    let mut target: Vec<Vec<&str>> = b
        .contexts
        .iter()
        .map(|c| sorted(c.rays.iter().map(String::as_str).collect()))
        .collect();
    mapped.sort();
    target.sort();
    mapped == target
}

fn format_component(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:?}", z.re)
    } else if z.re == 0.0 {
        format!("{:?}i", z.im)
    } else if z.im.is_sign_negative() {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
        if self.peek() == Some('#') {
            self.pos = self.chars.len();
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of line".into(),
        }
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col(),
            expected: expected.into(),
            found: self.found(),
        }
    }

    fn expect(&mut self, c: char) -> std::result::Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{c}`")))
        }
    }

    fn end_of_line(&mut self) -> std::result::Result<(), ParseError> {
        self.skip_ws();
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("end of line"))
        }
    }

    fn ident(&mut self, what: &str) -> std::result::Result<(usize, String), ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Err(self.error(what)),
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Ok((start + 1, self.chars[start..self.pos].iter().collect()))
    }

    /// Unsigned decimal literal: `digits[.digits][e[+-]digits]`.
    fn number(&mut self) -> Option<f64> {
        let start = self.pos;
        let digits = |cur: &mut Self| {
            let s = cur.pos;
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.pos += 1;
            }
            cur.pos - s
        };
        let mut count = digits(self);
        if self.peek() == Some('.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return None;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().ok()
    }

    /// One signed term; returns its value and whether it carried `i`.
    fn term(&mut self, sign_required: bool) -> std::result::Result<(f64, bool), ParseError> {
        self.skip_ws();
        let mut sign = 1.0;
        match self.peek() {
            Some('-') => {
                sign = -1.0;
                self.bump();
            }
            Some('+') => {
                self.bump();
            }
            _ if sign_required => return Err(self.error("`+` or `-`")),
            _ => {}
        }
        self.skip_ws();
        let value = self.number();
        let imaginary = if self.peek() == Some('i') {
            self.pos += 1;
            true
        } else {
            false
        };
        match (value, imaginary) {
            (None, false) => Err(self.error("number")),
            (v, imag) => Ok((sign * v.unwrap_or(1.0), imag)),
        }
    }

    fn complex(&mut self) -> std::result::Result<Complex64, ParseError> {
        let (first, first_imag) = self.term(false)?;
        if first_imag {
            return Ok(Complex64::new(0.0, first));
        }
        self.skip_ws();
        if matches!(self.peek(), Some('+' | '-')) {
            let (second, second_imag) = self.term(true)?;
            if !second_imag {
                return Err(self.error("imaginary part ending in `i`"));
            }
            return Ok(Complex64::new(first, second));
        }
        Ok(Complex64::new(first, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ks::{ks_operator, KSLabels, C_PRIME_BLUE, C_RED};
    use crate::BUNDLED_DIAGRAM;
    use std::f64::consts::FRAC_1_SQRT_2;

    const BASIS: &str =
        "ray a = (1, 0, 0)\nray b = (0, 1, 0)\nray c = (0, 0, 1)\ncontext z = { a, b, c }";

    fn op(l: [f64; 3], az: (f64, f64)) -> KSOperator {
        ks_operator(KSLabels::new(l[0], l[1], l[2]).unwrap(), az).unwrap()
    }

    #[test]
    fn parses_standard_basis() {
        let d = parse_diagram(BASIS).unwrap();
        assert_eq!(d.rays.len(), 3);
        assert_eq!(d.contexts.len(), 1);
        assert_eq!(d.contexts[0].rays, ["a", "b", "c"].map(String::from));
        let report = validate_diagram(&d);
        assert!(report.valid);
        assert!(report.interlinks.is_empty());
    }

    #[test]
    fn parses_bundled_diagram() {
        let d = parse_diagram(BUNDLED_DIAGRAM).unwrap();
        assert_eq!(d.rays.len(), 5);
        assert_eq!(d.contexts.len(), 2);
        let shared = d.ray("d").unwrap();
        assert_eq!(shared.components[1], Complex64::new(1.0, 0.0));
        let links = d.interlinks();
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].ray, "d");
        assert_eq!(links[0].contexts, vec!["red", "blue"]);
        let report = validate_diagram(&d);
        assert!(report.valid, "{:?}", report.failures);
    }

    #[test]
    fn complex_literals() {
        let d = parse_diagram(
            "ray a = (1.5, -2i, 0.25+3i)\nray b = (-1e-3-0.5i, i, -i)\nray c = (+2, .5, 1.)",
        )
        .unwrap();
        let raw = |r: &RayDecl| r.components.map(|z| z / r.scale);
        let a = raw(d.ray("a").unwrap());
        let close = |x: Complex64, y: Complex64| (x - y).norm() < 1e-14;
        assert!(close(a[0], Complex64::new(1.5, 0.0)));
        assert!(close(a[1], Complex64::new(0.0, -2.0)));
        assert!(close(a[2], Complex64::new(0.25, 3.0)));
        let b = raw(d.ray("b").unwrap());
        assert!(close(b[0], Complex64::new(-1e-3, -0.5)));
        assert!(close(b[1], Complex64::new(0.0, 1.0)));
        assert!(close(b[2], Complex64::new(0.0, -1.0)));
        let c = raw(d.ray("c").unwrap());
        assert!(close(c[1], Complex64::new(0.5, 0.0)));
    }

    #[test]
    fn normalizes_and_records_scale() {
        let d = parse_diagram("ray g = (-1, 0, 1)").unwrap();
        let g = d.ray("g").unwrap();
        assert!((g.scale - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g.components[0].re + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(g.state().is_normalized(1e-15));
    }

    #[test]
    fn arity_errors() {
        let err = parse_diagram("ray a = (1,0,0)\ncontext z = { a }").unwrap_err();
        assert!(matches!(err, ParseError::Arity { found: 1, .. }), "{err}");
        assert_eq!(err.position(), (2, 9));
        let err = parse_diagram(&format!("{BASIS}\ncontext y = {{ a, a, b }}")).unwrap_err();
        assert!(matches!(err, ParseError::Arity { found: 2, .. }));
        assert!(parse_diagram("ray a = (1,0,0)\ncontext z = { }").is_err());
    }

    #[test]
    fn reference_errors() {
        let err = parse_diagram("ray a = (1,0,0)\ncontext z = { a, q, a }").unwrap_err();
        assert_eq!(
            err,
            ParseError::UndeclaredRay {
                name: "q".into(),
                line: 2,
                col: 18
            }
        );
        let err = parse_diagram("ray a = (1,0,0)\nray a = (0,1,0)").unwrap_err();
        assert!(matches!(
            err,
            ParseError::DuplicateRay {
                line: 2,
                col: 5,
                ..
            }
        ));
        let err = parse_diagram(&format!("{BASIS}\ncontext z = {{ a, b, c }}")).unwrap_err();
        assert!(matches!(err, ParseError::DuplicateContext { line: 5, .. }));
        let err = parse_diagram("ray o = (0, 0, 0)").unwrap_err();
        assert!(matches!(err, ParseError::DegenerateRay { .. }));
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let cases: &[(&str, (usize, usize))] = &[
            ("ray a = (1, 0)", (1, 14)),
            ("ray a = 1, 0, 0)", (1, 9)),
            ("vector a = (1, 0, 0)", (1, 1)),
            ("ray a = (1, 0, 0) extra", (1, 19)),
            ("ray = (1, 0, 0)", (1, 5)),
            ("ray a = (1+2, 0, 0)", (1, 13)),
            ("ray a = (x, 0, 0)", (1, 10)),
            ("\n  context z = { a b c }", (2, 19)),
        ];
        for (text, pos) in cases {
            let err = parse_diagram(text).unwrap_err();
            assert!(matches!(err, ParseError::Syntax { .. }), "{text}: {err}");
            assert_eq!(err.position(), *pos, "{text}: {err}");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\n  ray a = (1,0,0) # x\nray b=(0,1,0)\nray c = ( 0 , 0 , 1 )\ncontext z={a,b,c}#done\n";
        let d = parse_diagram(text).unwrap();
        assert_eq!(d.rays.len(), 3);
        assert_eq!(d.contexts.len(), 1);
    }

    #[test]
    fn arbitrary_bytes_do_not_panic() {
        for text in [
            "(",
            "ray",
            "ray a = (",
            "context",
            "ray a = (1e, 0, 0)",
            "ray a = (--1, 0, 0)",
            "\u{0}\u{ffff}",
            "ray a = (1-i, 0, 1+i)",
        ] {
            let _ = parse_diagram(text);
        }
    }

    #[test]
    fn round_trip() {
        let d = parse_diagram(BUNDLED_DIAGRAM).unwrap();
        let again = parse_diagram(&d.to_gdl()).unwrap();
        assert_eq!(again.rays.len(), d.rays.len());
        for (a, b) in d.rays.iter().zip(&again.rays) {
            assert_eq!(a.name, b.name);
            for (x, y) in a.components.iter().zip(&b.components) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        assert_eq!(again.contexts, d.contexts);
        assert_eq!(again.to_gdl(), d.to_gdl());
    }

    #[test]
    fn non_orthogonal_context() {
        let d = parse_diagram(
            "ray a = (1,0,0)\nray b = (1,1,0)\nray c = (0,0,1)\ncontext k = { a, b, c }",
        )
        .unwrap();
        let report = validate_diagram(&d);
        assert!(!report.valid);
        let r = &report.residuals[0];
        assert_eq!(r.pair, ["a".to_string(), "b".to_string()]);
        assert!((r.residual - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(report.residuals[1].residual < 1e-15);
        assert!(report.residuals[2].residual < 1e-15);
    }

    #[test]
    fn diagram_from_both_operators() {
        let d = diagram_from_operators(&[
            op([1.0, 2.0, 3.0], C_RED),
            op([4.0, 5.0, 6.0], C_PRIME_BLUE),
        ])
        .unwrap();
        assert_eq!(d.rays.len(), 5);
        assert_eq!(d.contexts.len(), 2);
        assert_eq!(d.interlinks().len(), 1);
        assert!(validate_diagram(&d).valid);
        let fig1 = parse_diagram(BUNDLED_DIAGRAM).unwrap();
        assert!(isomorphic(&d, &fig1, 1e-8));
        assert!(isomorphic(&fig1, &d, 1e-8));
        // Deterministic naming.
        let again = diagram_from_operators(&[
            op([1.0, 2.0, 3.0], C_RED),
            op([4.0, 5.0, 6.0], C_PRIME_BLUE),
        ])
        .unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn diagram_from_single_and_repeated_operators() {
        let single = diagram_from_operators(&[op([1.0, 2.0, 3.0], C_RED)]).unwrap();
        assert_eq!((single.rays.len(), single.contexts.len()), (3, 1));
        let merged =
            diagram_from_operators(&[op([1.0, 2.0, 3.0], C_RED), op([7.0, 8.0, 9.0], C_RED)])
                .unwrap();
        assert_eq!((merged.rays.len(), merged.contexts.len()), (3, 1));
        assert!(!isomorphic(
            &single,
            &parse_diagram(BUNDLED_DIAGRAM).unwrap(),
            1e-8
        ));
    }

    #[test]
    fn report_serializes_with_stable_fields() {
        let report = validate_diagram(&parse_diagram(BUNDLED_DIAGRAM).unwrap());
        let json = serde_json::to_value(&report).unwrap();
        for key in ["valid", "normalization", "residuals", "interlinks"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let d = serde_json::to_value(parse_diagram(BUNDLED_DIAGRAM).unwrap()).unwrap();
        assert!(d.get("rays").is_some() && d.get("contexts").is_some());
    }
}
