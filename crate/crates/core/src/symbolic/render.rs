use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::{Expression, LinearForm, SymbolicError, Term, TermKey};
use crate::graph::{LineId, MatsubaraGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Text,
    Latex,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "latex" => Ok(Format::Latex),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// Names of the free `N` symbols, indexed like [`LinearForm::n_coeffs`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Symbols {
    pub vertices: Vec<String>,
}

impl Symbols {
    pub fn for_graph(graph: &MatsubaraGraph) -> Self {
        Symbols {
            vertices: graph.free_vertices().to_vec(),
        }
    }

    fn name(&self, v: usize) -> String {
        self.vertices.get(v).cloned().unwrap_or_else(|| format!("#{v}"))
    }
}

#[derive(Serialize, Deserialize)]
struct JsonExpression {
    vertices: Vec<String>,
    terms: Vec<JsonTerm>,
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    coeff: String,
    two_pi_pow: u32,
    q_exp: BTreeMap<u32, i32>,
    kernels: Vec<u32>,
    denoms: Vec<JsonForm>,
}

#[derive(Serialize, Deserialize)]
struct JsonForm {
    n: BTreeMap<String, i64>,
    q: BTreeMap<u32, i64>,
}

impl Expression {
    pub fn render(&self, symbols: &Symbols, format: Format) -> String {
        match format {
            Format::Text => Style::TEXT.render(self, symbols),
            Format::Latex => Style::LATEX.render(self, symbols),
            Format::Json => self.to_json(symbols),
        }
    }

    pub fn to_json(&self, symbols: &Symbols) -> String {
        let doc = JsonExpression {
            vertices: symbols.vertices.clone(),
            terms: self
                .iter()
                .map(|(k, c)| JsonTerm {
                    coeff: c.to_string(),
                    two_pi_pow: k.two_pi_pow,
                    q_exp: k.q_exp.iter().map(|(l, e)| (l.0, *e)).collect(),
                    kernels: k.kernels.iter().map(|l| l.0).collect(),
                    denoms: k
                        .denoms
                        .iter()
                        .map(|d| JsonForm {
                            n: d.n_coeffs().iter().map(|(&v, &c)| (symbols.name(v), c)).collect(),
                            q: d.q_coeffs().iter().map(|(l, &c)| (l.0, c as i64)).collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("expression serializes")
    }

    pub fn from_json(text: &str) -> Result<(Expression, Symbols), SymbolicError> {
        let doc: JsonExpression =
            serde_json::from_str(text).map_err(|e| SymbolicError::Parse(e.to_string()))?;
        let index: BTreeMap<&str, usize> = doc
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let mut terms = Vec::with_capacity(doc.terms.len());
        for t in &doc.terms {
            let coeff = BigRational::from_str(&t.coeff)
                .map_err(|_| SymbolicError::Parse(format!("bad coefficient {:?}", t.coeff)))?;
            let mut denoms = Vec::with_capacity(t.denoms.len());
            for d in &t.denoms {
                let mut n = Vec::new();
                for (name, &c) in &d.n {
                    let v = *index
                        .get(name.as_str())
                        .ok_or_else(|| SymbolicError::Parse(format!("unknown vertex {name:?}")))?;
                    n.push((v, c));
                }
                denoms.push(LinearForm::new(n, d.q.iter().map(|(&l, &c)| (LineId(l), c)))?);
            }
            terms.push(Term {
                coeff,
                two_pi_pow: t.two_pi_pow,
                q_exp: t.q_exp.iter().map(|(&l, &e)| (LineId(l), e)).collect(),
                kernels: t.kernels.iter().map(|&l| LineId(l)).collect(),
                denoms,
            });
        }
        Ok((
            Expression::from_terms(terms),
            Symbols {
                vertices: doc.vertices,
            },
        ))
    }
}

struct Style {
    minus: &'static str,
    two_pi: &'static str,
    latex: bool,
}

impl Style {
    const TEXT: Style = Style {
        minus: "−",
        two_pi: "2π",
        latex: false,
    };
    const LATEX: Style = Style {
        minus: "-",
        two_pi: "2\\pi",
        latex: true,
    };

    fn n_symbol(&self, symbols: &Symbols, v: usize) -> String {
        if self.latex {
            format!("N_{{{}}}", symbols.name(v))
        } else {
            format!("N{}", symbols.name(v))
        }
    }

    fn q_symbol(&self, l: LineId) -> String {
        if self.latex {
            format!("q_{{{l}}}")
        } else {
            format!("q{l}")
        }
    }

    fn kernel(&self, l: LineId) -> String {
        if self.latex {
            format!("n_{{B}}(q_{{{l}}})")
        } else {
            format!("nbe(q{l})")
        }
    }

    fn signed(&self, c: i64, symbol: &str, first: bool) -> String {
        let mut s = String::new();
        if c < 0 {
            s.push_str(self.minus);
        } else if !first {
            s.push('+');
        }
        if c.abs() != 1 {
            s.push_str(&c.abs().to_string());
        }
        s.push_str(symbol);
        s
    }

    fn form(&self, d: &LinearForm, symbols: &Symbols) -> String {
        let mut out = String::new();
        let n: Vec<(usize, i64)> = d.n_coeffs().iter().map(|(&v, &c)| (v, c)).collect();
        match n.as_slice() {
            [] => {}
            [(v, c)] if c.abs() == 1 => {
                if *c < 0 {
                    out.push_str(self.minus);
                }
                out.push('i');
                out.push_str(&self.n_symbol(symbols, *v));
            }
            _ => {
                out.push_str("i(");
                for (k, (v, c)) in n.iter().enumerate() {
                    out.push_str(&self.signed(*c, &self.n_symbol(symbols, *v), k == 0));
                }
                out.push(')');
            }
        }
        for (k, (l, c)) in d.q_coeffs().iter().enumerate() {
            let first = n.is_empty() && k == 0;
            out.push_str(&self.signed(*c as i64, &self.q_symbol(*l), first));
        }
        out
    }

    fn rational(&self, r: &BigRational) -> String {
        if r.denom().is_one() {
            r.numer().to_string()
        } else if self.latex {
            format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
        } else {
            format!("({}/{})", r.numer(), r.denom())
        }
    }

    fn two_pi_power(&self, k: u32) -> Option<String> {
        match k {
            0 => None,
            1 => Some(self.two_pi.to_string()),
            _ if self.latex => Some(format!("({})^{{{k}}}", self.two_pi)),
            _ => Some(format!("({})^{k}", self.two_pi)),
        }
    }

    /// `(2π)^k Π (2q_l)^{e_l}` split into numerator and denominator factors.
    fn prefactor(&self, two_pi_pow: u32, q_exp: &BTreeMap<LineId, i32>) -> (Vec<String>, Vec<String>) {
        let mut num = Vec::new();
        let mut den = Vec::new();
        num.extend(self.two_pi_power(two_pi_pow));
        for (&l, &e) in q_exp {
            let base = format!("2{}", self.q_symbol(l));
            let factor = match e.abs() {
                1 => base,
                p if self.latex => format!("({base})^{{{p}}}"),
                p => format!("({base})^{p}"),
            };
            if e > 0 {
                num.push(factor);
            } else {
                den.push(factor);
            }
        }
        (num, den)
    }

    fn fraction(&self, num: &str, dens: &[String]) -> String {
        if dens.is_empty() {
            return num.to_string();
        }
        if self.latex {
            let joined = dens.join("\\,");
            return format!("\\frac{{{num}}}{{{joined}}}");
        }
        if dens.len() == 1 {
            format!("{num}/({})", dens[0])
        } else {
            let joined: String = dens.iter().map(|d| format!("({d})")).collect();
            format!("{num}/({joined})")
        }
    }

    fn render(&self, e: &Expression, symbols: &Symbols) -> String {
        if e.is_zero() {
            return "0".into();
        }
        let first = e.iter().next().map(|(k, _)| (k.two_pi_pow, k.q_exp.clone())).unwrap();
        let shared = e.iter().all(|(k, _)| k.two_pi_pow == first.0 && k.q_exp == first.1);
        let (common, common_scale) = if shared {
            // Coefficients are shown relative to (2π)^k Π (2q)^e.
            let shift: i32 = first.1.values().sum();
            (Some(first.clone()), pow2(-shift))
        } else {
            (None, BigRational::one())
        };

        let mut body = String::new();
        for (i, (k, c)) in e.iter().enumerate() {
            let c = c * &common_scale;
            let negative = c.is_negative();
            if i == 0 {
                if negative {
                    body.push_str(self.minus);
                }
            } else {
                body.push_str(if negative { " " } else { " + " });
                if negative {
                    body.push_str(self.minus);
                    body.push(' ');
                }
            }
            body.push_str(&self.term(k, &c.abs(), symbols, common.is_none()));
        }

        match common {
            Some((pi, q_exp)) if pi > 0 || !q_exp.is_empty() => {
                let (num, den) = self.prefactor(pi, &q_exp);
                let num = if num.is_empty() { "1".to_string() } else { num.join(if self.latex { "\\," } else { "·" }) };
                if self.latex {
                    let pre = if den.is_empty() {
                        num
                    } else {
                        format!("\\frac{{{num}}}{{{}}}", den.join("\\,"))
                    };
                    format!("{pre}\\left[{body}\\right]")
                } else {
                    let pre = if den.is_empty() {
                        num
                    } else {
                        format!("{num}/({})", den.join("·"))
                    };
                    format!("({pre})[{body}]")
                }
            }
            _ => body,
        }
    }

    fn term(&self, k: &TermKey, magnitude: &BigRational, symbols: &Symbols, own_prefactor: bool) -> String {
        let mut factors: Vec<String> = Vec::new();
        if !magnitude.is_one() {
            factors.push(self.rational(magnitude));
        }
        let mut dens: Vec<String> = Vec::new();
        if own_prefactor {
            let (num, den) = self.prefactor(k.two_pi_pow, &k.q_exp);
            factors.extend(num);
            dens.extend(den);
        }
        factors.extend(k.kernels.iter().map(|&l| self.kernel(l)));
        dens.extend(k.denoms.iter().map(|d| self.form(d, symbols)));
        let num = if factors.is_empty() {
            "1".to_string()
        } else {
            factors.join(if self.latex { "\\," } else { "·" })
        };
        let mut out = String::new();
        let _ = write!(out, "{}", self.fraction(&num, &dens));
        out
    }
}

fn pow2(e: i32) -> BigRational {
    let p = BigInt::from(2).pow(e.unsigned_abs());
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::from(1), p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::expr::rational;
    use std::collections::BTreeSet;

    fn l(i: u32) -> LineId {
        LineId(i)
    }

    fn i_g2() -> Expression {
        let q_exp = BTreeMap::from([(l(1), -1), (l(2), -1)]);
        Expression::from_terms([
            Term {
                coeff: rational(1, 4),
                two_pi_pow: 1,
                q_exp: q_exp.clone(),
                kernels: BTreeSet::new(),
                denoms: vec![LinearForm::new([(0, 1)], [(l(1), 1), (l(2), 1)]).unwrap()],
            },
            Term {
                coeff: rational(-1, 4),
                two_pi_pow: 1,
                q_exp,
                kernels: BTreeSet::new(),
                denoms: vec![LinearForm::new([(0, 1)], [(l(1), -1), (l(2), -1)]).unwrap()],
            },
        ])
    }

    fn symbols() -> Symbols {
        Symbols {
            vertices: vec!["1".into()],
        }
    }

    #[test]
    fn text_layout() {
        assert_eq!(
            i_g2().render(&symbols(), Format::Text),
            "(2π/(2q1·2q2))[−1/(iN1−q1−q2) + 1/(iN1+q1+q2)]"
        );
    }

    #[test]
    fn latex_layout() {
        assert_eq!(
            i_g2().render(&symbols(), Format::Latex),
            "\\frac{2\\pi}{2q_{1}\\,2q_{2}}\\left[-\\frac{1}{iN_{1}-q_{1}-q_{2}} + \\frac{1}{iN_{1}+q_{1}+q_{2}}\\right]"
        );
    }

    #[test]
    fn empty_renders_as_zero() {
        for f in [Format::Text, Format::Latex] {
            assert_eq!(Expression::zero().render(&symbols(), f), "0");
        }
    }

    #[test]
    fn json_round_trip() {
        let e = i_g2().kernel_multiply(l(2)).unwrap().add(&i_g2());
        let text = e.render(&symbols(), Format::Json);
        let (back, syms) = Expression::from_json(&text).unwrap();
        assert_eq!(back, e);
        assert_eq!(syms, symbols());
        assert_eq!(back.to_json(&syms), text);
    }

    #[test]
    fn json_rejects_unknown_vertices() {
        let text = r#"{"vertices":["a"],"terms":[{"coeff":"1","two_pi_pow":0,"q_exp":{},"kernels":[],"denoms":[{"n":{"b":1},"q":{}}]}]}"#;
        assert!(matches!(Expression::from_json(text), Err(SymbolicError::Parse(_))));
    }

    #[test]
    fn mixed_prefactors_render_per_term() {
        let e = i_g2().add(&Expression::from_terms([Term::fraction(
            rational(3, 2),
            vec![LinearForm::new([], [(l(1), 1), (l(2), -1)]).unwrap()],
        )]));
        let s = e.render(&symbols(), Format::Text);
        assert!(s.contains("(3/2)/(q1−q2)"), "{s}");
    }
}
