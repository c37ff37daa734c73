//! JSON serialization helper emitting floats at 17 significant digits.

use crate::error::Result;
use serde::Serialize;
use serde_json::ser::Formatter;
use std::io;

struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with every float printed at 17 significant digits.
pub fn to_string_sig17<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}
