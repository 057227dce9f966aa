//! Density expressions: products of builtin factors.
//!
//! ```text
//! expr   := factor ('*' factor)*
//! factor := number
//!         | constant(c)
//!         | affine(c, b1, b2, ...)     c + Σ b_k x_k
//!         | gaussian(a, k)             a · exp(−k |x|²)
//! ```

use std::fmt;

use abp_core::mesh::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Constant(f64),
    Affine { c: f64, b: Vec<f64> },
    Gaussian { amp: f64, rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityExpr {
    pub factors: Vec<Factor>,
}

impl DensityExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            factors: vec![Factor::Constant(c)],
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if text.is_empty() {
            return Err("empty density expression".into());
        }
        let factors = split_top(text)?
            .into_iter()
            .map(parse_factor)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { factors })
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Constant(c) => *c,
                Factor::Affine { c, b } => c + b.iter().enumerate().map(|(k, bk)| bk * x[k]).sum::<f64>(),
                Factor::Gaussian { amp, rate } => amp * (-rate * x.norm_squared()).exp(),
            })
            .product()
    }

    /// Largest coordinate index used by an affine factor, plus one.
    pub fn coords_used(&self) -> usize {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Affine { b, .. } => b.len(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.factors.iter().all(|f| matches!(f, Factor::Constant(_)))
    }
}

impl fmt::Display for DensityExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|fa| match fa {
                Factor::Constant(c) => format!("{c}"),
                Factor::Affine { c, b } => {
                    let bs: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                    format!("affine({c}, {})", bs.join(", "))
                }
                Factor::Gaussian { amp, rate } => format!("gaussian({amp}, {rate})"),
            })
            .collect();
        write!(f, "{}", parts.join(" * "))
    }
}

fn split_top(text: &str) -> Result<Vec<&str>, String> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced `)`".into());
                }
            }
            '*' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced `(`".into());
    }
    out.push(text[start..].trim());
    if out.iter().any(|s| s.is_empty()) {
        return Err("empty factor".into());
    }
    Ok(out)
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("invalid number `{}`", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("number `{}` is not finite", s.trim()))
    }
}

fn parse_factor(s: &str) -> Result<Factor, String> {
    let Some(open) = s.find('(') else {
        return number(s).map(Factor::Constant);
    };
    let name = s[..open].trim();
    let body = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| format!("expected `)` at the end of `{s}`"))?;
    let args: Vec<f64> = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',').map(number).collect::<Result<_, _>>()?
    };
    let arity = |want: &str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(format!("`{name}` takes {want}, got {}", args.len()))
        }
    };
    match name {
        "constant" => {
            arity("one argument", args.len() == 1)?;
            Ok(Factor::Constant(args[0]))
        }
        "affine" => {
            arity("a constant and 1-4 slopes", (2..=5).contains(&args.len()))?;
            Ok(Factor::Affine {
                c: args[0],
                b: args[1..].to_vec(),
            })
        }
        "gaussian" => {
            arity("two arguments", args.len() == 2)?;
            Ok(Factor::Gaussian {
                amp: args[0],
                rate: args[1],
            })
        }
        other => Err(format!("unknown density `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use abp_core::mesh::point;

    #[test]
    fn products_evaluate() {
        let d = DensityExpr::parse("2 * affine(1, 0.5, 0) * gaussian(1, 1)").unwrap();
        let x = point(&[1.0, 1.0]);
        let expected = 2.0 * 1.5 * (-2.0f64).exp();
        assert!((d.eval(&x) - expected).abs() < 1e-15);
        assert_eq!(d.coords_used(), 2);
        assert!(!d.is_constant());
        assert!(DensityExpr::parse("constant(3)").unwrap().is_constant());
    }

    #[test]
    fn display_round_trips() {
        let d = DensityExpr::parse("affine(1, 0.5) * gaussian(2, 0.25)").unwrap();
        assert_eq!(DensityExpr::parse(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "gaussian(1)", "foo(1)", "affine(1)", "1 *", "(1", "constant(x)", "inf"] {
            assert!(DensityExpr::parse(bad).is_err(), "{bad}");
        }
    }
}
