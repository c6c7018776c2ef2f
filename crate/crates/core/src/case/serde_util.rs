//! Column encodings used by the case tables: `-1` for absent references and
//! absent numeric fields, `0/1` for status flags.

pub(crate) mod absent_id {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(id) => s.serialize_u64(*id as u64),
            None => s.serialize_i64(-1),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        let raw = f64::deserialize(d)?;
        if raw < 0.0 {
            Ok(None)
        } else if raw.fract() != 0.0 {
            Err(serde::de::Error::custom(format!("reference {raw} is not an integer")))
        } else {
            Ok(Some(raw as usize))
        }
    }
}

pub(crate) mod absent_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(v.unwrap_or(-1.0))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let raw = f64::deserialize(d)?;
        Ok(if raw < 0.0 { None } else { Some(raw) })
    }
}

pub(crate) mod flag {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Bool(bool),
        Num(f64),
    }

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(match Raw::deserialize(d)? {
            Raw::Bool(b) => b,
            Raw::Num(x) => x > 0.0,
        })
    }
}

pub(crate) fn default_true() -> bool {
    true
}

pub(crate) fn default_tap() -> f64 {
    1.0
}

pub(crate) fn default_angle_lim() -> f64 {
    std::f64::consts::FRAC_PI_3
}

pub(crate) fn default_angle_bigm() -> f64 {
    std::f64::consts::PI
}
