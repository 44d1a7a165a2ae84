use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{to_json_string, PStarTerm, ProbExpression, ValueSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Latex,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "latex" => Ok(Format::Latex),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected text, latex or json)")),
        }
    }
}

pub fn render(e: &ProbExpression, format: Format) -> String {
    match format {
        Format::Text => render_text(e),
        Format::Latex => render_latex(e),
        Format::Json => to_json_string(e),
    }
}

fn symbol_text(s: &ValueSymbol) -> &str {
    match s {
        ValueSymbol::Literal(v) => v.as_str(),
        ValueSymbol::Bound { name, .. } => name,
    }
}

fn join<'a>(it: impl Iterator<Item = &'a ValueSymbol>, sep: &str, f: impl Fn(&ValueSymbol) -> String) -> String {
    it.map(f).collect::<Vec<_>>().join(sep)
}

/// Plain text, values only: `sum_{w} P[z,w](y, x') * P[x](w)`.
pub fn render_text(e: &ProbExpression) -> String {
    let mut out = String::new();
    text(e, &mut out);
    out
}

fn text_term(t: &PStarTerm, out: &mut String) {
    out.push('P');
    if !t.intervention.is_empty() {
        write!(out, "[{}]", join(t.intervention.values(), ",", |s| symbol_text(s).to_string())).unwrap();
    }
    write!(out, "({})", join(t.joint.values(), ", ", |s| symbol_text(s).to_string())).unwrap();
}

fn text(e: &ProbExpression, out: &mut String) {
    match e {
        ProbExpression::Constant { value } => write!(out, "{value}").unwrap(),
        ProbExpression::PStar(t) => text_term(t, out),
        ProbExpression::Product { factors } => {
            for (i, f) in factors.iter().enumerate() {
                if i > 0 {
                    out.push_str(" * ");
                }
                let wrap = matches!(f, ProbExpression::SumOver { .. } | ProbExpression::Ratio { .. });
                if wrap {
                    out.push('(');
                }
                text(f, out);
                if wrap {
                    out.push(')');
                }
            }
        }
        ProbExpression::SumOver { over, body } => {
            let names: Vec<&str> = over.iter().map(|b| b.name.as_str()).collect();
            write!(out, "sum_{{{}}} ", names.join(", ")).unwrap();
            text(body, out);
        }
        ProbExpression::Ratio { numerator, denominator } => {
            let wrap_num = matches!(**numerator, ProbExpression::Ratio { .. });
            if wrap_num {
                out.push('(');
            }
            text(numerator, out);
            if wrap_num {
                out.push(')');
            }
            out.push_str(" / ");
            let wrap_den = !matches!(**denominator, ProbExpression::Constant { .. } | ProbExpression::PStar(_));
            if wrap_den {
                out.push('(');
            }
            text(denominator, out);
            if wrap_den {
                out.push(')');
            }
        }
    }
}

/// `x0` becomes `x_{0}`, `w12` becomes `w_{12}`.
fn latex_token(s: &str) -> String {
    let head = s.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'');
    let rest = &s[head.len()..];
    let digits = rest.trim_end_matches('\'');
    let primes = &rest[digits.len()..];
    let head = head.replace('_', "\\_");
    if digits.is_empty() || head.is_empty() {
        format!("{head}{digits}{primes}")
    } else {
        format!("{head}_{{{digits}}}{primes}")
    }
}

/// LaTeX: `\sum_{w} P_{z, w}(y, x') P_{x}(w)`.
pub fn render_latex(e: &ProbExpression) -> String {
    let mut out = String::new();
    latex(e, &mut out);
    out
}

fn latex(e: &ProbExpression, out: &mut String) {
    match e {
        ProbExpression::Constant { value } => write!(out, "{value}").unwrap(),
        ProbExpression::PStar(t) => {
            out.push('P');
            if !t.intervention.is_empty() {
                write!(out, "_{{{}}}", join(t.intervention.values(), ",", |s| latex_token(symbol_text(s)))).unwrap();
            }
            write!(out, "({})", join(t.joint.values(), ", ", |s| latex_token(symbol_text(s)))).unwrap();
        }
        ProbExpression::Product { factors } => {
            for f in factors {
                let wrap = matches!(f, ProbExpression::SumOver { .. });
                if wrap {
                    out.push_str("\\left(");
                }
                latex(f, out);
                if wrap {
                    out.push_str("\\right)");
                }
            }
        }
        ProbExpression::SumOver { over, body } => {
            let names: Vec<String> = over.iter().map(|b| latex_token(&b.name)).collect();
            write!(out, "\\sum_{{{}}} ", names.join(", ")).unwrap();
            latex(body, out);
        }
        ProbExpression::Ratio { numerator, denominator } => {
            out.push_str("\\frac{");
            latex(numerator, out);
            out.push_str("}{");
            latex(denominator, out);
            out.push('}');
        }
    }
}
