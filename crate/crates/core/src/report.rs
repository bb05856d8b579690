//! Deterministic JSON output: every float is written with 17 significant
//! digits, non-finite floats become `null`, keys keep declaration order.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Wraps a structural formatter and replaces its float rendering.
struct Precise<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Precise<F> {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// `x` with 17 significant digits in exponent notation, or `null`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write<T: Serialize, F: Formatter>(value: &T, formatter: F) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise(formatter));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Indented JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = write(value, PrettyFormatter::with_indent(b"  "))?;
    s.push('\n');
    Ok(s)
}

/// Single-line JSON.
pub fn to_json_compact<T: Serialize>(value: &T) -> Result<String> {
    write(value, CompactFormatter)
}

/// Hex SHA-256 of the compact JSON rendering.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let digest = Sha256::digest(to_json_compact(config)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Top-level report: tool identity, the configuration and its hash, and the
/// command's result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: String,
    pub config: &'a C,
    pub result: R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'a str, config: &'a C, result: R) -> Result<Self> {
        Ok(Envelope {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config_hash(config)?,
            config,
            result,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        b: f64,
        a: Vec<f64>,
        name: &'static str,
    }

    #[test]
    fn floats_have_seventeen_digits_and_nonfinite_is_null() {
        let s = to_json_compact(&Sample {
            b: 0.1,
            a: vec![f64::NAN, f64::INFINITY, -2.0],
            name: "x",
        })
        .unwrap();
        assert_eq!(s, r#"{"b":1.0000000000000001e-1,"a":[null,null,-2.0000000000000000e0],"name":"x"}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn round_trip_is_exact() {
        for x in [std::f64::consts::PI, 1e-300, 123456789.12345679, -5e-324] {
            let back: f64 = format_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&Sample { b: 1.0, a: vec![], name: "x" }).unwrap();
        let b = config_hash(&Sample { b: 1.0, a: vec![], name: "x" }).unwrap();
        let c = config_hash(&Sample { b: 1.0, a: vec![], name: "y" }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn pretty_output_is_valid_json() {
        let s = to_json(&Sample { b: 2.5, a: vec![1.0], name: "n" }).unwrap();
        assert!(s.ends_with("}\n"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"][0].as_f64(), Some(1.0));
    }
}
