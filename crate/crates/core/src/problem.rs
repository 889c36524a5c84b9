//! Problem-definition files.
//!
//! A problem is a TOML document:
//!
//! ```toml
//! dimension = 2
//! hodograph = ["-atanh(u) + 2*atanh(v)", "atanh(u) - atanh(v)"]
//!
//! [domain]
//! lower = [-1, -1]
//! upper = [1, 1]
//! margin = 1e-3
//!
//! [search]
//! starts = 64
//! seed = 0
//!
//! [parameters]
//! eps = 2.0
//! ```
//!
//! Exactly one of `hodograph` (n expressions in u-variables), `initial_data`
//! (n expressions in x-variables) or `potential` (one expression in
//! u-variables) is given. Variables are `u, v, w` or `u1 … un` on the
//! velocity side and `x, y, z` or `x1 … xn` on the position side; the letter
//! form exists only for n ≤ 3. Domain bounds may be numbers or constant
//! expressions over the parameters, e.g. `"2*u0"`.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::characteristics::InitialField;
use crate::error::SetupError;
use crate::expr::{parse_with_constants, BoxDomain, Expression, Func, VectorFunction, DEFAULT_MARGIN};
use crate::hodograph::{HodographSystem, DEFAULT_TOL_REAL};
use crate::potential::PotentialSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSettings {
    pub starts: usize,
    pub seed: u64,
    /// Lattice nodes per axis for scans.
    pub grid: usize,
    pub tol_real: f64,
    pub t_range: Option<(f64, f64)>,
    /// Also minimise every sorted branch separately.
    pub per_branch: bool,
}

impl SearchSettings {
    pub fn for_dimension(n: usize) -> SearchSettings {
        SearchSettings {
            starts: crate::blowup::DEFAULT_STARTS,
            seed: crate::blowup::DEFAULT_SEED,
            grid: if n <= 2 { 200 } else { 40 },
            tol_real: DEFAULT_TOL_REAL,
            t_range: None,
            per_branch: false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Model {
    Hodograph(HodographSystem),
    Potential(PotentialSystem),
    InitialData(InitialField),
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub model: Model,
    pub search: SearchSettings,
    pub parameters: Vec<(String, f64)>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        match &self.model {
            Model::Hodograph(s) => s.dim(),
            Model::Potential(p) => p.system().dim(),
            Model::InitialData(f) => f.dim(),
        }
    }

    /// The hodograph system, for hodograph or potential problems.
    pub fn system(&self) -> Option<&HodographSystem> {
        match &self.model {
            Model::Hodograph(s) => Some(s),
            Model::Potential(p) => Some(p.system()),
            Model::InitialData(_) => None,
        }
    }

    pub fn field(&self) -> Option<&InitialField> {
        match &self.model {
            Model::InitialData(f) => Some(f),
            _ => None,
        }
    }

    pub fn potential(&self) -> Option<&PotentialSystem> {
        match &self.model {
            Model::Potential(p) => Some(p),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match &self.model {
            Model::Hodograph(_) => "hodograph",
            Model::Potential(_) => "potential",
            Model::InitialData(_) => "initial_data",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    dimension: Spanned<i64>,
    variables: Option<Spanned<Vec<String>>>,
    hodograph: Option<Spanned<Vec<Spanned<String>>>>,
    initial_data: Option<Spanned<Vec<Spanned<String>>>>,
    potential: Option<Spanned<String>>,
    domain: Spanned<RawBox>,
    search: Option<Spanned<RawSearch>>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    lower: Vec<Bound>,
    upper: Vec<Bound>,
    margin: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Bound {
    Num(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    starts: Option<i64>,
    seed: Option<i64>,
    grid: Option<i64>,
    tol_real: Option<f64>,
    t_range: Option<[f64; 2]>,
    per_branch: Option<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    Velocity,
    Position,
}

impl Side {
    fn letters(self) -> [&'static str; 3] {
        match self {
            Side::Velocity => ["u", "v", "w"],
            Side::Position => ["x", "y", "z"],
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Side::Velocity => "u",
            Side::Position => "x",
        }
    }
}

/// Default variable names: letters up to three dimensions, numbered above.
pub fn default_variables(side_is_position: bool, n: usize, numbered: bool) -> Vec<String> {
    let side = if side_is_position { Side::Position } else { Side::Velocity };
    if numbered || n > 3 {
        (1..=n).map(|k| format!("{}{k}", side.stem())).collect()
    } else {
        side.letters()[..n].iter().map(|s| s.to_string()).collect()
    }
}

fn identifiers(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_alphabetic() || b[i] == b'_' {
            let s = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(&text[s..i]);
        } else if b[i].is_ascii_digit() || b[i] == b'.' {
            // skip numeric literals including exponents like 1e-3
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'.') {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    out
}

fn is_numbered(name: &str, side: Side) -> bool {
    name.strip_prefix(side.stem())
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()))
}

/// Parse a problem file. `overrides` replace or add `[parameters]` entries.
pub fn parse_problem(src: &str, overrides: &[(String, f64)]) -> Result<Problem, SetupError> {
    let raw: RawProblem = toml::from_str(src).map_err(|e| match e.span() {
        Some(span) => SetupError::at(src, span.start, e.message().trim().to_string()),
        None => SetupError::Invalid(e.message().trim().to_string()),
    })?;
    let dim_span = raw.dimension.span();
    let n = *raw.dimension.get_ref();
    if !(1..=16).contains(&n) {
        return Err(SetupError::at(src, dim_span.start, format!("dimension {n} outside 1..=16")));
    }
    let n = n as usize;

    let mut parameters: Vec<(String, f64)> = raw.parameters.into_iter().collect();
    for (k, v) in overrides {
        match parameters.iter_mut().find(|(name, _)| name == k) {
            Some(slot) => slot.1 = *v,
            None => parameters.push((k.clone(), *v)),
        }
    }
    for (name, v) in &parameters {
        if !v.is_finite() {
            return Err(SetupError::Invalid(format!("parameter `{name}` is not finite")));
        }
        if Func::from_name(name).is_some() || name == "pi" {
            return Err(SetupError::Invalid(format!("parameter `{name}` shadows a built-in name")));
        }
    }

    let given = [raw.hodograph.is_some(), raw.initial_data.is_some(), raw.potential.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(SetupError::Invalid(
            "exactly one of `hodograph`, `initial_data` or `potential` must be given".into(),
        ));
    }
    let side = if raw.initial_data.is_some() { Side::Position } else { Side::Velocity };

    let mut texts: Vec<(String, usize)> = Vec::new();
    let list_span;
    if let Some(list) = raw.hodograph.as_ref().or(raw.initial_data.as_ref()) {
        list_span = list.span();
        for e in list.get_ref() {
            texts.push((e.get_ref().clone(), string_body_offset(src, e.span())));
        }
        if texts.len() != n {
            return Err(SetupError::at(
                src,
                list_span.start,
                format!("{} expressions given for dimension {n}", texts.len()),
            ));
        }
    } else if let Some(w) = &raw.potential {
        texts.push((w.get_ref().clone(), string_body_offset(src, w.span())));
    }

    let variables = resolve_variables(src, &raw.variables, &texts, side, n, &parameters)?;

    let mut exprs: Vec<Expression> = Vec::with_capacity(texts.len());
    for (text, offset) in &texts {
        let e = parse_with_constants(text, &variables, &parameters)
            .map_err(|err| SetupError::at(src, offset + err.offset, err.to_string()))?;
        exprs.push(e);
    }

    let bx = raw.domain.get_ref();
    let bx_at = raw.domain.span().start;
    let lower = bounds(src, bx_at, &bx.lower, &parameters)?;
    let upper = bounds(src, bx_at, &bx.upper, &parameters)?;
    if lower.len() != n || upper.len() != n {
        return Err(SetupError::at(
            src,
            bx_at,
            format!("domain bounds have {} and {} entries for dimension {n}", lower.len(), upper.len()),
        ));
    }
    let domain = BoxDomain::new(lower, upper, bx.margin.unwrap_or(DEFAULT_MARGIN))
        .map_err(|e| SetupError::at(src, bx_at, e.to_string()))?;

    let mut search = SearchSettings::for_dimension(n);
    if let Some(s) = &raw.search {
        let at = s.span().start;
        let s = s.get_ref();
        let positive = |v: i64, what: &str| -> Result<usize, SetupError> {
            if v < 1 {
                Err(SetupError::at(src, at, format!("search.{what} must be positive")))
            } else {
                Ok(v as usize)
            }
        };
        if let Some(v) = s.starts {
            search.starts = positive(v, "starts")?;
        }
        if let Some(v) = s.grid {
            search.grid = positive(v, "grid")?.max(2);
        }
        if let Some(v) = s.seed {
            if v < 0 {
                return Err(SetupError::at(src, at, "search.seed must be non-negative"));
            }
            search.seed = v as u64;
        }
        if let Some(v) = s.tol_real {
            if !(v > 0.0) {
                return Err(SetupError::at(src, at, "search.tol_real must be positive"));
            }
            search.tol_real = v;
        }
        if let Some([a, b]) = s.t_range {
            if !(a < b) {
                return Err(SetupError::at(src, at, "search.t_range must be increasing"));
            }
            search.t_range = Some((a, b));
        }
        search.per_branch = s.per_branch.unwrap_or(false);
    }

    let invalid = |e: crate::error::Error| SetupError::Invalid(e.to_string());
    let model = if raw.potential.is_some() {
        let w = exprs.pop().expect("one potential expression");
        Model::Potential(PotentialSystem::from_potential(w, domain).map_err(invalid)?)
    } else {
        let vf = VectorFunction::from_components(exprs)?;
        if side == Side::Position {
            Model::InitialData(InitialField::new(vf, domain).map_err(invalid)?)
        } else {
            Model::Hodograph(HodographSystem::new(vf, domain).map_err(invalid)?)
        }
    };
    Ok(Problem {
        model,
        search,
        parameters,
    })
}

/// Byte offset of the first character inside a TOML string literal.
fn string_body_offset(src: &str, span: Range<usize>) -> usize {
    let lit = &src[span.start.min(src.len())..span.end.min(src.len())];
    if lit.starts_with("\"\"\"") || lit.starts_with("'''") {
        span.start + 3
    } else {
        span.start + 1
    }
}

fn resolve_variables(
    src: &str,
    declared: &Option<Spanned<Vec<String>>>,
    texts: &[(String, usize)],
    side: Side,
    n: usize,
    parameters: &[(String, f64)],
) -> Result<Vec<String>, SetupError> {
    let other = match side {
        Side::Velocity => Side::Position,
        Side::Position => Side::Velocity,
    };
    let is_param = |name: &str| parameters.iter().any(|(p, _)| p == name);
    if let Some(decl) = declared {
        let at = decl.span().start;
        let names = decl.get_ref();
        if names.len() != n {
            return Err(SetupError::at(src, at, format!("{} variables declared for dimension {n}", names.len())));
        }
        let letters = names.iter().all(|v| side.letters().contains(&v.as_str()));
        let numbered = names.iter().all(|v| is_numbered(v, side));
        if letters && names[..] == default_variables(side == Side::Position, n, false)[..]
            || numbered && names[..] == default_variables(side == Side::Position, n, true)[..]
        {
            if let Some(p) = names.iter().find(|v| is_param(v)) {
                return Err(SetupError::at(src, at, format!("`{p}` is both a variable and a parameter")));
            }
            return Ok(names.clone());
        }
        let uses_numbered = names.iter().any(|v| is_numbered(v, side));
        let uses_letters = names.iter().any(|v| side.letters().contains(&v.as_str()));
        let msg = if uses_numbered && uses_letters {
            "variable naming conventions are mixed".to_string()
        } else {
            format!(
                "variables must be {} or {}",
                default_variables(side == Side::Position, n, false).join(", "),
                default_variables(side == Side::Position, n, true).join(", ")
            )
        };
        return Err(SetupError::at(src, at, msg));
    }

    let mut letters = false;
    let mut numbered = false;
    for (text, offset) in texts {
        for id in identifiers(text) {
            if is_param(id) {
                continue;
            }
            let here = offset + (id.as_ptr() as usize - text.as_ptr() as usize);
            if side.letters().contains(&id) {
                letters = true;
            } else if is_numbered(id, side) {
                numbered = true;
            } else if other.letters().contains(&id) || is_numbered(id, other) {
                let what = match side {
                    Side::Velocity => "hodograph data are written in u-variables",
                    Side::Position => "initial data are written in x-variables",
                };
                return Err(SetupError::at(src, here, format!("`{id}`: {what}")));
            }
            if letters && numbered {
                return Err(SetupError::at(src, here, "variable naming conventions are mixed"));
            }
        }
    }
    if letters && n > 3 {
        return Err(SetupError::Invalid(format!(
            "letter variables only exist up to dimension 3; use {}1..{}{n}",
            side.stem(),
            side.stem()
        )));
    }
    let names = default_variables(side == Side::Position, n, numbered);
    if let Some(p) = names.iter().find(|v| is_param(v)) {
        return Err(SetupError::Invalid(format!("`{p}` is both a variable and a parameter")));
    }
    Ok(names)
}

fn bounds(src: &str, at: usize, list: &[Bound], parameters: &[(String, f64)]) -> Result<Vec<f64>, SetupError> {
    list.iter()
        .map(|b| match b {
            Bound::Num(v) => Ok(*v),
            Bound::Text(text) => constant_expression(text, parameters).map_err(|m| SetupError::at(src, at, m)),
        })
        .collect()
}

/// Evaluate an expression that may only mention parameters.
pub fn constant_expression(text: &str, parameters: &[(String, f64)]) -> Result<f64, String> {
    // The parser needs at least one variable; `_` cannot clash with a parameter
    // that made it through validation, and any use of it is rejected below.
    let e = parse_with_constants(text, &["_"], parameters).map_err(|e| format!("bound `{text}`: {e}"))?;
    let a = e.eval(&[0.0]).map_err(|e| format!("bound `{text}`: {e}"))?;
    let b = e.eval(&[1.0]).map_err(|e| format!("bound `{text}`: {e}"))?;
    if a != b {
        return Err(format!("bound `{text}` is not constant"));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX61: &str = r#"
dimension = 2
hodograph = ["-atanh(u) + 2*atanh(v)", "atanh(u) - atanh(v)"]

[domain]
lower = [-1, -1]
upper = [1, 1]
"#;

    #[test]
    fn parses_hodograph_file() {
        let p = parse_problem(EX61, &[]).unwrap();
        assert_eq!(p.kind(), "hodograph");
        let s = p.system().unwrap();
        let b = s.real_branches(&[0.0, 0.0], 1e-9).unwrap().values();
        assert!((b[1] - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(p.search.starts, 64);
        assert_eq!(p.search.grid, 200);
    }

    #[test]
    fn parameters_and_constant_bounds() {
        let src = r#"
dimension = 2
hodograph = ["atanh(1 - u/u0)/a", "atanh(1 - v/v0)/d"]
[domain]
lower = [0, 0]
upper = ["2*u0", "2*v0"]
[parameters]
a = 1
d = 2
u0 = 1
v0 = 0.5
"#;
        let p = parse_problem(src, &[("u0".into(), 2.0)]).unwrap();
        let s = p.system().unwrap();
        assert_eq!(s.domain().upper(), &[4.0, 1.0]);
        // f1_u at u = u0 is -1/(a u0)
        let j = s.jacobian(&[2.0, 0.5]).unwrap();
        assert!((j[(0, 0)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn initial_data_and_potential() {
        let src = "dimension = 2\ninitial_data = [\"tanh(x + 2*y)\", \"tanh(x + y)\"]\n[domain]\nlower = [-2, -2]\nupper = [2, 2]\n";
        assert_eq!(parse_problem(src, &[]).unwrap().kind(), "initial_data");
        let src = "dimension = 3\npotential = \"u1^2*u2 + u3\"\n[domain]\nlower = [-1, -1, -1]\nupper = [1, 1, 1]\n";
        assert_eq!(parse_problem(src, &[]).unwrap().kind(), "potential");
    }

    fn err(src: &str) -> SetupError {
        parse_problem(src, &[]).unwrap_err()
    }

    #[test]
    fn rejects_mixed_conventions_with_location() {
        let src = "dimension = 2\nhodograph = [\"u + u2\", \"v\"]\n[domain]\nlower = [-1, -1]\nupper = [1, 1]\n";
        match err(src) {
            SetupError::At { line, column, message } => {
                assert_eq!(line, 2);
                assert_eq!(column, 19);
                assert!(message.contains("mixed"));
            }
            e => panic!("{e:?}"),
        }
        let src = "dimension = 2\nvariables = [\"u\", \"u2\"]\nhodograph = [\"u\", \"u2\"]\n[domain]\nlower = [-1, -1]\nupper = [1, 1]\n";
        assert!(err(src).to_string().contains("mixed"));
    }

    #[test]
    fn rejects_bad_files() {
        let both = "dimension = 1\nhodograph = [\"u\"]\npotential = \"u\"\n[domain]\nlower = [-1]\nupper = [1]\n";
        assert!(matches!(err(both), SetupError::Invalid(_)));
        let count = "dimension = 2\nhodograph = [\"u\"]\n[domain]\nlower = [-1, -1]\nupper = [1, 1]\n";
        assert!(matches!(err(count), SetupError::At { line: 2, .. }));
        let syntax = "dimension = 1\nhodograph = [\"u +* u\"]\n[domain]\nlower = [-1]\nupper = [1]\n";
        match err(syntax) {
            SetupError::At { line, column, .. } => assert_eq!((line, column), (2, 18)),
            e => panic!("{e:?}"),
        }
        let xvar = "dimension = 1\nhodograph = [\"x\"]\n[domain]\nlower = [-1]\nupper = [1]\n";
        assert!(err(xvar).to_string().contains("u-variables"));
        let inverted = "dimension = 1\nhodograph = [\"u\"]\n[domain]\nlower = [1]\nupper = [-1]\n";
        assert!(matches!(err(inverted), SetupError::At { line: 3, .. }));
        let toml_err = "dimension = 1\nhodograph = [\"u\"\n";
        assert!(matches!(err(toml_err), SetupError::At { .. }));
        let unknown = "dimension = 1\nhodograph = [\"u\"]\nfoo = 1\n[domain]\nlower = [-1]\nupper = [1]\n";
        assert!(err(unknown).to_string().contains("foo"));
    }

    #[test]
    fn letters_only_to_three() {
        assert_eq!(default_variables(false, 3, false), ["u", "v", "w"]);
        assert_eq!(default_variables(true, 4, false), ["x1", "x2", "x3", "x4"]);
    }
}
