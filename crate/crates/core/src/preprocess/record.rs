use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of an encoded record: 5 scalars plus 4 one-hot layer blocks.
pub const FEATURE_WIDTH: usize = 37;
pub const MAX_LAYERS: usize = 4;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Material {
    Ti,
    Al,
    Ni,
    Au,
    Mo,
    Ta,
    TiN,
    Pt,
}

impl Material {
    pub const ALL: [Material; 8] = [
        Material::Ti,
        Material::Al,
        Material::Ni,
        Material::Au,
        Material::Mo,
        Material::Ta,
        Material::TiN,
        Material::Pt,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Material::Ti => "Ti",
            Material::Al => "Al",
            Material::Ni => "Ni",
            Material::Au => "Au",
            Material::Mo => "Mo",
            Material::Ta => "Ta",
            Material::TiN => "TiN",
            Material::Pt => "Pt",
        }
    }
}

impl FromStr for Material {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Material::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Schema(format!("unknown layer material {s:?}")))
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ambient {
    N2,
    Other,
}

impl FromStr for Ambient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "N2" => Ok(Ambient::N2),
            "Other" => Ok(Ambient::Other),
            other => Err(Error::Schema(format!("unknown anneal ambient {other:?}"))),
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ambient::N2 => "N2",
            Ambient::Other => "Other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Experimental,
    Synthesized,
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "experimental" => Ok(Provenance::Experimental),
            "synthesized" => Ok(Provenance::Synthesized),
            other => Err(Error::Schema(format!("unknown provenance {other:?}"))),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Experimental => "experimental",
            Provenance::Synthesized => "synthesized",
        })
    }
}

/// One Ohmic-contact recipe and its measured contact resistance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub record_id: String,
    /// Al mole fraction of the barrier.
    pub al_content: f64,
    pub barrier_thickness_nm: f64,
    pub anneal_temp_c: f64,
    pub anneal_time_s: f64,
    pub anneal_ambient: Ambient,
    /// Bottom-to-top metal layers, at most four.
    pub metal_stack: Vec<Material>,
    /// Contact resistance in ohm-mm.
    pub r_c: Option<f64>,
    pub provenance: Provenance,
}

impl DeviceRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Schema(format!("record {}: {what}", self.record_id)));
        if self.record_id.trim().is_empty() {
            return Err(Error::Schema("record id is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.al_content) {
            return bad(format!("al_content {} outside [0, 1]", self.al_content));
        }
        if !(self.barrier_thickness_nm > 0.0 && self.barrier_thickness_nm.is_finite()) {
            return bad(format!("barrier thickness {} must be positive", self.barrier_thickness_nm));
        }
        if !self.anneal_temp_c.is_finite() {
            return bad("anneal temperature is not finite".into());
        }
        if !(self.anneal_time_s > 0.0 && self.anneal_time_s.is_finite()) {
            return bad(format!("anneal time {} must be positive", self.anneal_time_s));
        }
        if self.metal_stack.is_empty() || self.metal_stack.len() > MAX_LAYERS {
            return bad(format!(
                "metal stack has {} layers, expected 1..={MAX_LAYERS}",
                self.metal_stack.len()
            ));
        }
        if let Some(r) = self.r_c {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("r_c {r} must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn stack_label(&self) -> String {
        self.metal_stack
            .iter()
            .map(|m| m.as_str())
            .collect::<Vec<_>>()
            .join("/")
    }
}

/// Layout: `[al_content, barrier_thickness_nm, anneal_temp_c, anneal_time_s,
/// ambient_flag]` followed by one 8-way one-hot block per layer slot
/// (material order Ti, Al, Ni, Au, Mo, Ta, TiN, Pt). Empty slots are zero.
pub fn encode_record(rec: &DeviceRecord) -> Result<[f64; FEATURE_WIDTH]> {
    rec.validate()?;
    let mut v = [0.0; FEATURE_WIDTH];
    v[0] = rec.al_content;
    v[1] = rec.barrier_thickness_nm;
    v[2] = rec.anneal_temp_c;
    v[3] = rec.anneal_time_s;
    v[4] = match rec.anneal_ambient {
        Ambient::N2 => 0.0,
        Ambient::Other => 1.0,
    };
    for (slot, m) in rec.metal_stack.iter().enumerate() {
        v[5 + 8 * slot + m.index()] = 1.0;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(al: f64, t: f64, temp: f64, time: f64, stack: &[Material]) -> DeviceRecord {
        DeviceRecord {
            record_id: "x".into(),
            al_content: al,
            barrier_thickness_nm: t,
            anneal_temp_c: temp,
            anneal_time_s: time,
            anneal_ambient: Ambient::N2,
            metal_stack: stack.to_vec(),
            r_c: Some(1.0),
            provenance: Provenance::Experimental,
        }
    }

    use Material::*;

    #[test]
    fn ti_al_ni_au_layout() {
        let v = encode_record(&rec(0.25, 13.0, 830.0, 30.0, &[Ti, Al, Ni, Au])).unwrap();
        assert_eq!(&v[..5], &[0.25, 13.0, 830.0, 30.0, 0.0]);
        assert_eq!(v[5 + Ti.index()], 1.0);
        assert_eq!(v[13 + Al.index()], 1.0);
        assert_eq!(v[21 + Ni.index()], 1.0);
        assert_eq!(v[29 + Au.index()], 1.0);
        assert_eq!(v.iter().skip(5).sum::<f64>(), 4.0);
    }

    #[test]
    fn repeated_material_in_two_blocks() {
        let v = encode_record(&rec(0.20, 15.0, 500.0, 90.0, &[Ti, Al, Ti, TiN])).unwrap();
        assert_eq!(v[5 + Ti.index()], 1.0);
        assert_eq!(v[21 + Ti.index()], 1.0);
        assert_eq!(v[29 + TiN.index()], 1.0);
    }

    #[test]
    fn short_stack_pads_with_zero_blocks() {
        let v = encode_record(&rec(0.2, 10.0, 800.0, 60.0, &[Ti, Al])).unwrap();
        assert_eq!(v.len(), FEATURE_WIDTH);
        assert!(v[21..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_records() {
        assert!(encode_record(&rec(1.5, 10.0, 800.0, 60.0, &[Ti])).is_err());
        assert!(encode_record(&rec(0.2, 0.0, 800.0, 60.0, &[Ti])).is_err());
        assert!(encode_record(&rec(0.2, 10.0, 800.0, -1.0, &[Ti])).is_err());
        assert!(encode_record(&rec(0.2, 10.0, 800.0, 60.0, &[])).is_err());
        assert!(encode_record(&rec(0.2, 10.0, 800.0, 60.0, &[Ti, Al, Ni, Au, Ti])).is_err());
        assert!("Cu".parse::<Material>().is_err());
        assert_eq!("TiN".parse::<Material>().unwrap(), TiN);
    }
}
