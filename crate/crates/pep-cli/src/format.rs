//! JSON problem files. Field elements are `{"a": "p/q", "b": "r/s"}` meaning
//! `a + b·√d`; a missing `b` is zero. Writing is canonical, so a parsed and
//! re-written file is byte-stable.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use pep_core::lattice::{Coset, IntMatrix, Lattice};
use pep_core::matrix::{certify_semisimple, BgSpec, Matrix, SemisimpleCert};
use pep_core::pep::{exponent_rows, Character, PepPolynomial, PepVector, Term};
use pep_core::places::{Field, FieldElement};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// Exact rational written as `"p/q"` or `"p"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub BigRational);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational string such as \"-3/4\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                parse_rational(v).map(Rat).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat(BigRational::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat(BigRational::from_integer(v.into())))
            }
        }
        d.deserialize_any(V)
    }
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let t = s.trim();
    let ok = !t.is_empty() && t.chars().all(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '/');
    if !ok {
        return Err(format!("invalid rational {s:?}"));
    }
    match t.split_once('/') {
        Some((_, den)) if BigInt::from_str(den).map_or(true, |d| d.is_zero()) => Err(format!("invalid denominator in {s:?}")),
        _ => BigRational::from_str(t).map_err(|_| format!("invalid rational {s:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldJson {
    Rational,
    Quadratic { d: i64 },
}

impl FieldJson {
    pub fn to_field(self) -> Result<Field, CliError> {
        match self {
            FieldJson::Rational => Ok(Field::Rational),
            FieldJson::Quadratic { d } => Ok(Field::quadratic(d)?),
        }
    }

    pub fn from_field(k: Field) -> Self {
        match k.d() {
            None => FieldJson::Rational,
            Some(d) => FieldJson::Quadratic { d },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElemJson {
    pub a: Rat,
    #[serde(default = "zero_rat")]
    pub b: Rat,
}

fn zero_rat() -> Rat {
    Rat(BigRational::zero())
}

impl ElemJson {
    pub fn to_elem(&self, k: Field) -> Result<FieldElement, CliError> {
        Ok(FieldElement::new(k, self.a.0.clone(), self.b.0.clone())?)
    }

    pub fn from_elem(x: &FieldElement) -> Self {
        ElemJson { a: Rat(x.a().clone()), b: Rat(x.b().clone()) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub coeff: ElemJson,
    /// One row per base, one column per variable; `[]` is the zero matrix.
    pub exponents: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentJson {
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemJson {
    pub field: FieldJson,
    pub bases: Vec<ElemJson>,
    pub variables: usize,
    pub components: Vec<ComponentJson>,
}

impl ProblemJson {
    pub fn to_pep(&self) -> Result<PepVector, CliError> {
        let k = self.field.to_field()?;
        let bases = self.bases.iter().map(|b| b.to_elem(k)).collect::<Result<Vec<_>, _>>()?;
        let (nb, r) = (bases.len(), self.variables);
        let mut comps = Vec::with_capacity(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            let mut terms = Vec::with_capacity(c.terms.len());
            for (j, t) in c.terms.iter().enumerate() {
                let rows = if t.exponents.is_empty() { vec![vec![0; r]; nb] } else { t.exponents.clone() };
                if rows.len() != nb || rows.iter().any(|row| row.len() != r) {
                    return Err(CliError::Schema(format!("components[{i}].terms[{j}].exponents must be {nb}x{r}")));
                }
                terms.push(Term { coeff: t.coeff.to_elem(k)?, character: Character::new(IntMatrix::from_rows(r, &rows)) });
            }
            comps.push(PepPolynomial::new(terms));
        }
        Ok(PepVector::new(k, bases, r, comps)?)
    }

    pub fn from_pep(f: &PepVector) -> Result<Self, CliError> {
        let components = f
            .components()
            .iter()
            .map(|c| {
                let terms = c
                    .terms
                    .iter()
                    .map(|t| {
                        let exponents = exponent_rows(&t.character).ok_or_else(|| CliError::Overflow("exponent".into()))?;
                        Ok(TermJson { coeff: ElemJson::from_elem(&t.coeff), exponents })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(ComponentJson { terms })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(ProblemJson {
            field: FieldJson::from_field(f.field()),
            bases: f.bases().iter().map(ElemJson::from_elem).collect(),
            variables: f.variables(),
            components,
        })
    }
}

/// A coset `offset + span(basis rows)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetJson {
    pub offset: Vec<i64>,
    pub basis: Vec<Vec<i64>>,
}

impl CosetJson {
    pub fn from_coset(c: &Coset) -> Result<Self, CliError> {
        let offset = c.offset().iter().map(to_i64).collect::<Result<_, _>>()?;
        Ok(CosetJson { offset, basis: lattice_rows(c.lattice())? })
    }
}

pub fn lattice_rows(l: &Lattice) -> Result<Vec<Vec<i64>>, CliError> {
    matrix_rows(l.basis())
}

pub fn matrix_rows(m: &IntMatrix) -> Result<Vec<Vec<i64>>, CliError> {
    m.to_i64_rows().ok_or_else(|| CliError::Overflow("lattice entry".into()))
}

fn to_i64(x: &BigInt) -> Result<i64, CliError> {
    num_traits::ToPrimitive::to_i64(x).ok_or_else(|| CliError::Overflow("integer".into()))
}

/// Square matrix as a list of rows.
pub type MatrixJson = Vec<Vec<ElemJson>>;

pub fn matrix_from_json(k: Field, rows: &MatrixJson) -> Result<Matrix, CliError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Schema("matrices must be square".into()));
    }
    let entries = rows.iter().flatten().map(|e| e.to_elem(k)).collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::new(k, n, entries)?)
}

pub fn matrix_to_json(m: &Matrix) -> MatrixJson {
    let n = m.size();
    (0..n).map(|i| (0..n).map(|j| ElemJson::from_elem(m.get(i, j))).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    /// Field of the eigenvalues; defaults to the generator's field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldJson>,
    pub eigenvalues: Vec<ElemJson>,
    pub conjugator: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorJson {
    pub matrix: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

/// Generators `γ_1, …, γ_r` over a common field, each optionally with a
/// diagonalization `γ = G·diag(λ)·G⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupJson {
    pub field: FieldJson,
    pub generators: Vec<GeneratorJson>,
}

impl GroupJson {
    pub fn matrices(&self) -> Result<Vec<Matrix>, CliError> {
        let k = self.field.to_field()?;
        self.generators.iter().map(|g| matrix_from_json(k, &g.matrix)).collect()
    }

    pub fn to_bg(&self) -> Result<BgSpec, CliError> {
        let k = self.field.to_field()?;
        let mut factors = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            let m = matrix_from_json(k, &g.matrix)?;
            let cert = match &g.certificate {
                None => certify_semisimple(&m)?,
                Some(c) => {
                    let ck = c.field.map_or(Ok(k), |f| f.to_field())?;
                    SemisimpleCert {
                        eigenvalues: c.eigenvalues.iter().map(|e| e.to_elem(ck)).collect::<Result<_, _>>()?,
                        conjugator: matrix_from_json(ck, &c.conjugator)?,
                    }
                }
            };
            factors.push((m, cert));
        }
        Ok(BgSpec::new(factors)?)
    }
}

/// Parse JSON, keeping serde's line and column on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse { path: path.to_string(), line: e.line(), column: e.column(), message: e.to_string() })
}

pub fn write_problem(p: &ProblemJson) -> String {
    let mut s = serde_json::to_string_pretty(p).expect("problem serializes");
    s.push('\n');
    s
}
