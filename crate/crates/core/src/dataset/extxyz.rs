//! Extended XYZ reader and canonical writer.
//!
//! Each frame is an atom-count line, a comment line of `key=value` pairs
//! (`energy=` required, `old_index=` and `units=` optional), then one
//! `symbol x y z fx fy fz` line per atom.

use std::fmt::Write as _;

use log::warn;
use thiserror::Error;

use super::units::{convert_units, UnitSystem};
use super::{Frame, Species};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("frame {frame}, line {line}: {kind}")]
pub struct ParseError {
    /// Zero-based frame ordinal within the file.
    pub frame: usize,
    /// One-based line number.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("atom count mismatch: header declares {expected} atoms, found {found} body lines")]
    AtomCountMismatch { expected: usize, found: usize },
    #[error("unknown element symbol `{0}`")]
    UnknownElement(String),
    #[error("non-finite value `{0}`")]
    NonFinite(String),
    #[error("missing `energy` key in comment line")]
    MissingEnergy,
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("invalid atom count line `{0}`")]
    InvalidHeader(String),
    #[error("expected 7 fields (symbol x y z fx fy fz), found {0}")]
    WrongFieldCount(usize),
    #[error("invalid comment value: {0}")]
    InvalidComment(String),
}

/// Splits a comment line into `key=value` pairs; values may be double-quoted.
pub fn comment_pairs(comment: &str) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    let mut chars = comment.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.peek().is_none() {
            break;
        }
        let mut key = String::new();
        while let Some(&c) = chars.peek() {
            if c == '=' || c.is_whitespace() {
                break;
            }
            key.push(c);
            chars.next();
        }
        if chars.peek() != Some(&'=') {
            // bare flag
            continue;
        }
        chars.next();
        let mut value = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            for c in chars.by_ref() {
                if c == '"' {
                    break;
                }
                value.push(c);
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                value.push(c);
                chars.next();
            }
        }
        pairs.push((key.to_ascii_lowercase(), value));
    }
    pairs
}

fn parse_float(token: &str) -> Result<f64, ParseErrorKind> {
    let v: f64 = token.parse().map_err(|_| ParseErrorKind::InvalidNumber(token.to_string()))?;
    if !v.is_finite() {
        return Err(ParseErrorKind::NonFinite(token.to_string()));
    }
    Ok(v)
}

/// Parses every frame of `text`, converting to eV and eV/Å.
///
/// `declared` is the unit system from the manifest; a `units=` key in a
/// comment line overrides it for that frame.
pub fn parse_extxyz(text: &str, declared: UnitSystem) -> Result<Vec<Frame>, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut frames = Vec::new();
    let mut cursor = 0usize;
    let mut warned_missing_index = false;

    loop {
        while cursor < lines.len() && lines[cursor].trim().is_empty() {
            cursor += 1;
        }
        if cursor >= lines.len() {
            break;
        }
        let frame_ordinal = frames.len();
        let err = |line: usize, kind| ParseError { frame: frame_ordinal, line: line + 1, kind };

        let header = lines[cursor].trim();
        let n_atoms: usize =
            header.parse().map_err(|_| err(cursor, ParseErrorKind::InvalidHeader(header.to_string())))?;
        if n_atoms == 0 {
            return Err(err(cursor, ParseErrorKind::InvalidHeader(header.to_string())));
        }
        let comment_line = cursor + 1;
        if comment_line >= lines.len() {
            return Err(err(cursor, ParseErrorKind::AtomCountMismatch { expected: n_atoms, found: 0 }));
        }

        let mut energy = None;
        let mut source_index = None;
        let mut units = declared;
        for (key, value) in comment_pairs(lines[comment_line]) {
            match key.as_str() {
                "energy" => energy = Some(parse_float(&value).map_err(|k| err(comment_line, k))?),
                "old_index" => {
                    let idx: u64 = value
                        .parse()
                        .map_err(|_| err(comment_line, ParseErrorKind::InvalidComment(format!("old_index={value}"))))?;
                    source_index = Some(idx);
                }
                "units" => {
                    units = value.parse().map_err(|e: String| err(comment_line, ParseErrorKind::InvalidComment(e)))?;
                }
                _ => {}
            }
        }
        let energy = energy.ok_or_else(|| err(comment_line, ParseErrorKind::MissingEnergy))?;
        let source_index = match source_index {
            Some(i) => i,
            None => {
                if !warned_missing_index {
                    warn!("frame {frame_ordinal}: no old_index key, falling back to file order");
                    warned_missing_index = true;
                }
                frame_ordinal as u64
            }
        };

        let mut species = Vec::with_capacity(n_atoms);
        let mut positions = Vec::with_capacity(n_atoms);
        let mut forces = Vec::with_capacity(n_atoms);
        for atom in 0..n_atoms {
            let line_no = comment_line + 1 + atom;
            let mismatch = || err(line_no, ParseErrorKind::AtomCountMismatch { expected: n_atoms, found: atom });
            if line_no >= lines.len() {
                return Err(mismatch());
            }
            let tokens: Vec<&str> = lines[line_no].split_whitespace().collect();
            if tokens.len() <= 1 {
                // blank line or the next frame's header
                return Err(mismatch());
            }
            if tokens.len() != 7 {
                return Err(err(line_no, ParseErrorKind::WrongFieldCount(tokens.len())));
            }
            let s = Species::from_symbol(tokens[0])
                .ok_or_else(|| err(line_no, ParseErrorKind::UnknownElement(tokens[0].to_string())))?;
            let mut values = [0.0f64; 6];
            for (slot, token) in values.iter_mut().zip(&tokens[1..]) {
                *slot = parse_float(token).map_err(|k| err(line_no, k))?;
            }
            species.push(s);
            positions.push([values[0], values[1], values[2]]);
            let to_ev = |f: f64| {
                convert_units(f, units.force(), super::Unit::ElectronVoltPerAngstrom)
                    .expect("force units share a dimension")
            };
            forces.push([to_ev(values[3]), to_ev(values[4]), to_ev(values[5])]);
        }
        let energy =
            convert_units(energy, units.energy(), super::Unit::ElectronVolt).expect("energy units share a dimension");
        frames.push(Frame { species, positions, energy, forces, source_index });
        cursor = comment_line + 1 + n_atoms;
    }
    Ok(frames)
}

/// Canonical writer: eV units, shortest round-trip floats.
pub fn write_extxyz(frames: &[Frame]) -> String {
    let mut out = String::new();
    for frame in frames {
        let _ = writeln!(out, "{}", frame.len());
        let _ = writeln!(out, "energy={:?} old_index={} units=ev", frame.energy, frame.source_index);
        for ((s, p), f) in frame.species.iter().zip(&frame.positions).zip(&frame.forces) {
            let _ = writeln!(out, "{} {:?} {:?} {:?} {:?} {:?} {:?}", s.symbol(), p[0], p[1], p[2], f[0], f[1], f[2]);
        }
    }
    out
}
