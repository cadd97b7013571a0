//! Serde adapters rendering complex scalars as `{"re": .., "im": ..}`
//! objects (the wire format of all reports) instead of the `[re, im]`
//! tuples num-complex defaults to.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C64;

#[derive(Serialize, Deserialize)]
struct Parts {
    re: f64,
    im: f64,
}

pub mod c64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &C64, s: S) -> Result<S::Ok, S::Error> {
        Parts { re: v.re, im: v.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let p = Parts::deserialize(d)?;
        Ok(C64::new(p.re, p.im))
    }
}

pub mod c64_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<Parts> = v.iter().map(|c| Parts { re: c.re, im: c.im }).collect();
        parts.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let parts = Vec::<Parts>::deserialize(d)?;
        Ok(parts.into_iter().map(|p| C64::new(p.re, p.im)).collect())
    }
}

pub mod c64_vec_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<C64>>, s: S) -> Result<S::Ok, S::Error> {
        let parts: Option<Vec<Parts>> = v
            .as_ref()
            .map(|v| v.iter().map(|c| Parts { re: c.re, im: c.im }).collect());
        parts.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<C64>>, D::Error> {
        let parts = Option::<Vec<Parts>>::deserialize(d)?;
        Ok(parts.map(|v| v.into_iter().map(|p| C64::new(p.re, p.im)).collect()))
    }
}

pub mod c64_vec_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<C64>], s: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<Vec<Parts>> = v
            .iter()
            .map(|row| row.iter().map(|c| Parts { re: c.re, im: c.im }).collect())
            .collect();
        parts.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<C64>>, D::Error> {
        let parts = Vec::<Vec<Parts>>::deserialize(d)?;
        Ok(parts
            .into_iter()
            .map(|row| row.into_iter().map(|p| C64::new(p.re, p.im)).collect())
            .collect())
    }
}
