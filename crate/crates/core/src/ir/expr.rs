use std::fmt;

use super::Var;

/// Linear angle expression `constant + Σ coef·var`.
///
/// Rotation angles in the IR are either literals or sums over classical
/// variables (received angles, corrections, measurement outcomes scaled by
/// π). Merging two rotations adds their expressions.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AngleExpr {
    pub constant: f64,
    pub terms: Vec<(f64, Var)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("malformed term `{0}`")]
    BadTerm(String),
    #[error("undefined variable `{0}`")]
    Undefined(String),
}

impl AngleExpr {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, terms: Vec::new() }
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Self { constant: 0.0, terms: vec![(1.0, v.into())] }
    }

    pub fn scaled(coef: f64, v: impl Into<Var>) -> Self {
        Self { constant: 0.0, terms: vec![(coef, v.into())] }
    }

    /// Sum of two expressions; coefficients of repeated variables are combined.
    pub fn plus(&self, other: &AngleExpr) -> AngleExpr {
        let mut out = self.clone();
        out.constant += other.constant;
        for (c, v) in &other.terms {
            match out.terms.iter_mut().find(|(_, w)| w == v) {
                Some((acc, _)) => *acc += c,
                None => out.terms.push((*c, v.clone())),
            }
        }
        out
    }

    pub fn add_term(mut self, coef: f64, v: impl Into<Var>) -> Self {
        let v = v.into();
        match self.terms.iter_mut().find(|(_, w)| *w == v) {
            Some((acc, _)) => *acc += coef,
            None => self.terms.push((coef, v)),
        }
        self
    }

    pub fn add_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms.iter().map(|(_, v)| v)
    }

    pub fn eval<F>(&self, mut lookup: F) -> Result<f64, ExprError>
    where
        F: FnMut(&Var) -> Option<f64>,
    {
        let mut acc = self.constant;
        for (c, v) in &self.terms {
            let x = lookup(v).ok_or_else(|| ExprError::Undefined(v.to_string()))?;
            acc += c * x;
        }
        Ok(acc)
    }

    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let src = src.trim();
        if src.is_empty() {
            return Err(ExprError::Empty);
        }
        let mut out = AngleExpr::default();
        for term in split_terms(src) {
            let term = term.trim();
            if term.is_empty() {
                return Err(ExprError::BadTerm(src.to_string()));
            }
            if let Some((coef, name)) = term.split_once('*') {
                let c: f64 = coef.trim().parse().map_err(|_| ExprError::BadTerm(term.to_string()))?;
                out = out.add_term(c, parse_var(name.trim(), term)?);
            } else if let Ok(c) = term.parse::<f64>() {
                out.constant += c;
            } else if let Some(name) = term.strip_prefix('-') {
                out = out.add_term(-1.0, parse_var(name, term)?);
            } else {
                out = out.add_term(1.0, parse_var(term, term)?);
            }
        }
        Ok(out)
    }
}

fn parse_var(name: &str, term: &str) -> Result<Var, ExprError> {
    if Var::is_valid_name(name) {
        Ok(Var::new(name))
    } else {
        Err(ExprError::BadTerm(term.to_string()))
    }
}

/// Splits at top-level `+` and at `-` that starts a new signed term.
fn split_terms(src: &str) -> Vec<&str> {
    let bytes = src.as_bytes();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 0..bytes.len() {
        let ch = bytes[i];
        if i == 0 || (ch != b'+' && ch != b'-') {
            continue;
        }
        let prev = bytes[i - 1];
        if prev == b'*' || prev == b'+' || prev == b'-' {
            continue;
        }
        // exponent of a float literal such as 1e-5
        if (prev == b'e' || prev == b'E')
            && i >= 2
            && (bytes[i - 2].is_ascii_digit() || bytes[i - 2] == b'.')
            && src[start..i - 1].trim_start_matches(['+', '-']).chars().all(|c| c.is_ascii_digit() || c == '.')
        {
            continue;
        }
        parts.push(&src[start..i]);
        start = if ch == b'+' { i + 1 } else { i };
    }
    parts.push(&src[start..]);
    parts
}

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut pieces: Vec<String> = Vec::new();
        if self.constant != 0.0 || self.terms.is_empty() {
            pieces.push(format!("{}", self.constant));
        }
        for (c, v) in &self.terms {
            pieces.push(if *c == 1.0 {
                v.to_string()
            } else if *c == -1.0 {
                format!("-{v}")
            } else {
                format!("{c}*{v}")
            });
        }
        let mut out = String::new();
        for (i, p) in pieces.iter().enumerate() {
            if i > 0 && !p.starts_with('-') {
                out.push('+');
            }
            out.push_str(p);
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sum_of_variables() {
        let e = AngleExpr::parse("theta1+theta2").unwrap();
        assert_eq!(e.constant, 0.0);
        assert_eq!(e.terms.len(), 2);
        assert_eq!(e.to_string(), "theta1+theta2");
    }

    #[test]
    fn parse_negative_and_scaled_terms() {
        let e = AngleExpr::parse("-1.5-3.141592653589793*m1+r").unwrap();
        assert_eq!(e.constant, -1.5);
        assert_eq!(e.terms[0], (-std::f64::consts::PI, Var::new("m1")));
        assert_eq!(e.terms[1], (1.0, Var::new("r")));
        assert_eq!(AngleExpr::parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn exponent_literals_are_not_split() {
        let e = AngleExpr::parse("1e-5+x").unwrap();
        assert_eq!(e.constant, 1e-5);
        assert_eq!(e.terms.len(), 1);
    }

    #[test]
    fn plus_combines_like_terms() {
        let a = AngleExpr::var("a").add_constant(1.0);
        let b = AngleExpr::scaled(2.0, "a").add_term(1.0, "b");
        let s = a.plus(&b);
        assert_eq!(s.constant, 1.0);
        assert_eq!(s.terms, vec![(3.0, Var::new("a")), (1.0, Var::new("b"))]);
    }

    #[test]
    fn eval_reports_undefined() {
        let e = AngleExpr::var("x");
        assert_eq!(e.eval(|_| None), Err(ExprError::Undefined("x".into())));
        assert_eq!(e.eval(|_| Some(2.0)), Ok(2.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(AngleExpr::parse("").is_err());
        assert!(AngleExpr::parse("a+").is_err());
        assert!(AngleExpr::parse("2*3x").is_err());
    }
}
