//! Flat spin-array records tagged with the domain hash, as JSON or a compact
//! bit-packed binary form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::HexDomain;

const MAGIC: &[u8; 4] = b"HXS1";

/// Spins in domain face order, `+1` / `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub domain_hash: String,
    pub spins: Vec<i8>,
}

impl ConfigRecord {
    pub fn new(domain: &HexDomain, spins: &[i8]) -> Result<Self> {
        if spins.len() != domain.len() {
            return Err(Error::Format(format!("{} spins for {} faces", spins.len(), domain.len())));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Format("spins must be +-1".into()));
        }
        Ok(Self {
            domain_hash: domain.content_hash(),
            spins: spins.to_vec(),
        })
    }

    /// Checks the record belongs to `domain`.
    pub fn check(&self, domain: &HexDomain) -> Result<()> {
        if self.domain_hash != domain.content_hash() || self.spins.len() != domain.len() {
            return Err(Error::Format("record does not match the domain".into()));
        }
        Ok(())
    }

    /// Occupations as `{0, 1}` with `1` for `+`.
    pub fn bits(&self) -> Vec<u8> {
        self.spins.iter().map(|&s| u8::from(s > 0)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: Self = serde_json::from_str(text)?;
        if rec.spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Format("spins must be +-1".into()));
        }
        Ok(rec)
    }

    /// `magic | 8-byte hash | u32 LE length | packed bits, LSB first`.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let hash = decode_hash(&self.domain_hash)?;
        let mut out = Vec::with_capacity(16 + self.spins.len().div_ceil(8));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&hash);
        out.extend_from_slice(&(self.spins.len() as u32).to_le_bytes());
        let mut packed = vec![0u8; self.spins.len().div_ceil(8)];
        for (i, &s) in self.spins.iter().enumerate() {
            if s > 0 {
                packed[i / 8] |= 1 << (i % 8);
            }
        }
        out.extend_from_slice(&packed);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::Format("not a spin record".into()));
        }
        let domain_hash: String = bytes[4..12].iter().map(|b| format!("{b:02x}")).collect();
        let len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if body.len() != len.div_ceil(8) {
            return Err(Error::Format("truncated spin record".into()));
        }
        let spins = (0..len).map(|i| if body[i / 8] >> (i % 8) & 1 == 1 { 1 } else { -1 }).collect();
        Ok(Self { domain_hash, spins })
    }
}

fn decode_hash(hex: &str) -> Result<[u8; 8]> {
    if hex.len() != 16 {
        return Err(Error::Format(format!("bad domain hash {hex:?}")));
    }
    let mut out = [0u8; 8];
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| Error::Format(format!("bad domain hash {hex:?}")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let d = HexDomain::hex_box(3, 3).unwrap();
        let spins = [1, -1, -1, 1, 1, 1, -1, 1, -1];
        let rec = ConfigRecord::new(&d, &spins).unwrap();
        let back = ConfigRecord::from_json(&rec.to_json().unwrap()).unwrap();
        assert_eq!(back, rec);
        let bytes = rec.to_bytes().unwrap();
        assert_eq!(bytes.len(), 16 + 2);
        let back = ConfigRecord::from_bytes(&bytes).unwrap();
        assert_eq!(back, rec);
        back.check(&d).unwrap();
        assert!(back.check(&HexDomain::hex_box(9, 1).unwrap()).is_err());
        assert_eq!(rec.bits(), vec![1, 0, 0, 1, 1, 1, 0, 1, 0]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(ConfigRecord::from_bytes(b"nope").is_err());
        assert!(ConfigRecord::from_json(r#"{"domain_hash":"00","spins":[2]}"#).is_err());
    }
}
