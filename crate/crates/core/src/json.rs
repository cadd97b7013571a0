//! External JSON descriptions of operators and backgrounds.
//!
//! Operator document:
//! ```json
//! {
//!   "p": 1,
//!   "diagonals": [ { "offset": 0, "entries": { "1": {"re": 2.0, "im": 0.0} } } ],
//!   "tail": { "kind": "zero" }
//! }
//! ```
//! Omitted diagonals and entries default to 1 on `|offset| = p` and 0
//! inside; exp-beta tails read
//! `{ "kind": "exp_beta", "C1": ..., "C2": ..., "beta": ... }`.
//! The doubly-infinite format is identical with signed entry keys, and the
//! background format lists the period-`p` coefficient triples directly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bi::BiBandedOperator;
use crate::error::{Error, Result};
use crate::generators::JacobiDescription;
use crate::operator::{BandedOperator, DiagonalProvider, Tail};
use crate::periodic::{AsymptoticallyPeriodicJacobi, PeriodicBackground};
use crate::C64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ComplexDto {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexDto {
    fn from(v: C64) -> Self {
        ComplexDto { re: v.re, im: v.im }
    }
}

impl From<ComplexDto> for C64 {
    fn from(v: ComplexDto) -> Self {
        C64::new(v.re, v.im)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailDto {
    Zero,
    ExpBeta {
        #[serde(rename = "C1")]
        c1: f64,
        #[serde(rename = "C2")]
        c2: f64,
        beta: f64,
    },
}

impl TailDto {
    pub fn to_tail(&self) -> Tail {
        match self {
            TailDto::Zero => Tail::Zero,
            TailDto::ExpBeta { c1, c2, beta } => Tail::ExpBeta {
                c1: *c1,
                c2: *c2,
                beta: *beta,
            },
        }
    }

    pub fn from_tail(tail: &Tail) -> Result<Self> {
        match tail {
            Tail::Zero => Ok(TailDto::Zero),
            Tail::ExpBeta { c1, c2, beta } => Ok(TailDto::ExpBeta {
                c1: *c1,
                c2: *c2,
                beta: *beta,
            }),
            Tail::Summable { .. } => Err(Error::Input(
                "summable tails have no external JSON form".into(),
            )),
        }
    }
}

fn default_tail() -> TailDto {
    TailDto::Zero
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagonalDto {
    pub offset: i64,
    #[serde(default)]
    pub entries: BTreeMap<String, ComplexDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDto {
    pub p: usize,
    #[serde(default)]
    pub diagonals: Vec<DiagonalDto>,
    #[serde(default = "default_tail")]
    pub tail: TailDto,
}

fn parse_entries(entries: &BTreeMap<String, ComplexDto>) -> Result<BTreeMap<i64, C64>> {
    entries
        .iter()
        .map(|(k, v)| {
            let n: i64 = k
                .parse()
                .map_err(|_| Error::Input(format!("entry key '{k}' is not an integer")))?;
            Ok((n, (*v).into()))
        })
        .collect()
}

impl OperatorDto {
    pub fn to_operator(&self) -> Result<BandedOperator> {
        let diagonals = self
            .diagonals
            .iter()
            .map(|d| DiagonalProvider::new(self.p, d.offset, parse_entries(&d.entries)?))
            .collect::<Result<Vec<_>>>()?;
        BandedOperator::new(self.p, diagonals, self.tail.to_tail())
    }

    pub fn from_operator(op: &BandedOperator) -> Result<Self> {
        let diagonals = op
            .diagonals()
            .iter()
            .filter(|d| !d.entries().is_empty())
            .map(|d| DiagonalDto {
                offset: d.offset(),
                entries: d
                    .entries()
                    .iter()
                    .map(|(n, v)| (n.to_string(), (*v).into()))
                    .collect(),
            })
            .collect();
        Ok(OperatorDto {
            p: op.p(),
            diagonals,
            tail: TailDto::from_tail(op.tail())?,
        })
    }
}

/// Doubly-infinite variant: same shape, signed entry keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiOperatorDto {
    pub p: usize,
    #[serde(default)]
    pub diagonals: Vec<DiagonalDto>,
    #[serde(default = "default_tail")]
    pub tail: TailDto,
}

impl BiOperatorDto {
    pub fn to_operator(&self) -> Result<BiBandedOperator> {
        let mut entries = Vec::new();
        for d in &self.diagonals {
            for (row, v) in parse_entries(&d.entries)? {
                entries.push((row, row + d.offset, v));
            }
        }
        BiBandedOperator::new(self.p, &entries, self.tail.to_tail().clone())
    }

    pub fn from_operator(op: &BiBandedOperator) -> Result<Self> {
        let mut per_offset: BTreeMap<i64, BTreeMap<String, ComplexDto>> = BTreeMap::new();
        for (&(i, j), &v) in op.explicit_entries() {
            per_offset
                .entry(j - i)
                .or_default()
                .insert(i.to_string(), v.into());
        }
        Ok(BiOperatorDto {
            p: op.p(),
            diagonals: per_offset
                .into_iter()
                .map(|(offset, entries)| DiagonalDto { offset, entries })
                .collect(),
            tail: TailDto::from_tail(op.tail())?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundDto {
    pub p: usize,
    pub a: Vec<ComplexDto>,
    pub b: Vec<ComplexDto>,
    pub c: Vec<ComplexDto>,
}

impl BackgroundDto {
    pub fn to_background(&self) -> Result<PeriodicBackground> {
        if self.a.len() != self.p || self.b.len() != self.p || self.c.len() != self.p {
            return Err(Error::Input(format!(
                "background lists must have length p = {}",
                self.p
            )));
        }
        PeriodicBackground::new(
            self.a.iter().map(|v| (*v).into()).collect(),
            self.b.iter().map(|v| (*v).into()).collect(),
            self.c.iter().map(|v| (*v).into()).collect(),
        )
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PerturbationDto {
    #[serde(default)]
    pub a: BTreeMap<String, ComplexDto>,
    #[serde(default)]
    pub b: BTreeMap<String, ComplexDto>,
    #[serde(default)]
    pub c: BTreeMap<String, ComplexDto>,
}

/// Background plus optional two-sided perturbation and ω certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicDocumentDto {
    pub background: BackgroundDto,
    #[serde(default)]
    pub perturbation: Option<PerturbationDto>,
    #[serde(default = "default_tail")]
    pub omega_tail: TailDto,
}

impl PeriodicDocumentDto {
    pub fn to_jacobi(&self) -> Result<AsymptoticallyPeriodicJacobi> {
        let bg = self.background.to_background()?;
        let pert = self.perturbation.clone().unwrap_or_default();
        AsymptoticallyPeriodicJacobi::new(
            bg,
            parse_entries(&pert.a)?,
            parse_entries(&pert.b)?,
            parse_entries(&pert.c)?,
            self.omega_tail.to_tail(),
        )
    }

    pub fn has_perturbation(&self) -> bool {
        self.perturbation
            .as_ref()
            .map(|p| !(p.a.is_empty() && p.b.is_empty() && p.c.is_empty()))
            .unwrap_or(false)
    }
}

/// Input of the interleaving generator: a list of Jacobi matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobiListDto {
    pub jacobis: Vec<JacobiComponentDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JacobiComponentDto {
    #[serde(default)]
    pub diag: Vec<ComplexDto>,
    #[serde(default)]
    pub off: Vec<ComplexDto>,
}

impl JacobiListDto {
    pub fn to_components(&self) -> Vec<JacobiDescription> {
        self.jacobis
            .iter()
            .map(|j| JacobiDescription {
                diag: j.diag.iter().map(|v| (*v).into()).collect(),
                off: j.off.iter().map(|v| (*v).into()).collect(),
            })
            .collect()
    }
}

pub fn operator_from_json(text: &str) -> Result<BandedOperator> {
    let dto: OperatorDto =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("operator JSON: {e}")))?;
    dto.to_operator()
}

pub fn operator_to_json(op: &BandedOperator) -> Result<String> {
    let dto = OperatorDto::from_operator(op)?;
    serde_json::to_string_pretty(&dto).map_err(|e| Error::Input(e.to_string()))
}

pub fn bi_operator_from_json(text: &str) -> Result<BiBandedOperator> {
    let dto: BiOperatorDto = serde_json::from_str(text)
        .map_err(|e| Error::Input(format!("bi-infinite operator JSON: {e}")))?;
    dto.to_operator()
}

pub fn bi_operator_to_json(op: &BiBandedOperator) -> Result<String> {
    let dto = BiOperatorDto::from_operator(op)?;
    serde_json::to_string_pretty(&dto).map_err(|e| Error::Input(e.to_string()))
}

pub fn periodic_from_json(text: &str) -> Result<PeriodicDocumentDto> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("background JSON: {e}")))
}

pub fn jacobi_list_from_json(text: &str) -> Result<JacobiListDto> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("jacobi list JSON: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn operator_roundtrip_and_defaults() {
        let text = r#"{
            "p": 2,
            "diagonals": [
                { "offset": 0, "entries": { "1": {"re": 0.3, "im": 0.0} } },
                { "offset": 2, "entries": { "1": {"re": 1.0, "im": 0.4} } }
            ],
            "tail": { "kind": "zero" }
        }"#;
        let op = operator_from_json(text).unwrap();
        assert_eq!(op.p(), 2);
        assert_eq!(op.entry(1, 1), C64::new(0.3, 0.0));
        assert_eq!(op.entry(1, 3), C64::new(1.0, 0.4));
        assert_eq!(op.entry(2, 4), C64::new(1.0, 0.0), "omitted defaults to 1");
        assert!((op.perturbation_size(1) - 0.7).abs() < 1e-15);

        let round = operator_from_json(&operator_to_json(&op).unwrap()).unwrap();
        for i in 1..6 {
            for j in 1..6 {
                assert_eq!(op.entry(i, j), round.entry(i, j));
            }
        }
    }

    #[test]
    fn exp_beta_tail_roundtrip() {
        let text = r#"{ "p": 1, "diagonals": [],
                        "tail": { "kind": "exp_beta", "C1": 0.5, "C2": 1.0, "beta": 0.5 } }"#;
        let op = operator_from_json(text).unwrap();
        match op.tail() {
            Tail::ExpBeta { c1, c2, beta } => {
                assert_eq!((*c1, *c2, *beta), (0.5, 1.0, 0.5));
            }
            t => panic!("wrong tail {t:?}"),
        }
        let json = operator_to_json(&op).unwrap();
        assert!(json.contains("\"C1\""), "capitalized field names: {json}");
    }

    #[test]
    fn malformed_documents_are_input_errors() {
        assert!(matches!(operator_from_json("not json"), Err(Error::Input(_))));
        assert!(matches!(
            operator_from_json(r#"{ "p": 1, "diagonals": [ { "offset": 0, "entries": { "x": {"re": 1, "im": 0} } } ] }"#),
            Err(Error::Input(_))
        ));
        // structurally fine but invalid as an operator
        assert!(operator_from_json(
            r#"{ "p": 1, "diagonals": [ { "offset": 1, "entries": { "1": {"re": 0, "im": 0} } } ] }"#
        )
        .is_err());
    }

    #[test]
    fn bi_operator_signed_keys() {
        let text = r#"{ "p": 1, "diagonals": [
            { "offset": 0, "entries": { "-3": {"re": 1.0, "im": 0.0}, "0": {"re": 3.0, "im": 0.0} } }
        ] }"#;
        let op = bi_operator_from_json(text).unwrap();
        assert_eq!(op.entry(-3, -3), C64::new(1.0, 0.0));
        assert_eq!(op.entry(0, 0), C64::new(3.0, 0.0));
        let round = bi_operator_from_json(&bi_operator_to_json(&op).unwrap()).unwrap();
        assert_eq!(round.entry(-3, -3), C64::new(1.0, 0.0));
    }

    #[test]
    fn periodic_document() {
        let text = r#"{
            "background": { "p": 1,
                "a": [{"re": 1.0, "im": 0.0}],
                "b": [{"re": 0.0, "im": 0.0}],
                "c": [{"re": 1.0, "im": 0.0}] },
            "perturbation": { "b": { "0": {"re": 3.0, "im": 0.0} } }
        }"#;
        let doc = periodic_from_json(text).unwrap();
        assert!(doc.has_perturbation());
        let j = doc.to_jacobi().unwrap();
        assert_eq!(j.b(0), C64::new(3.0, 0.0));
        assert_eq!(j.b(1), C64::new(0.0, 0.0));
        assert_eq!(j.omega(0), 3.0);
    }

    proptest! {
        /// JSON round-trip preserves every stored entry bit-exactly.
        #[test]
        fn roundtrip_preserves_entries(n in 1i64..30, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let op = BandedOperator::from_entries(
                1,
                &[(n, n, C64::new(re, im))],
                Tail::Zero,
            ).unwrap();
            let round = operator_from_json(&operator_to_json(&op).unwrap()).unwrap();
            prop_assert_eq!(round.entry(n, n), C64::new(re, im));
        }
    }
}
