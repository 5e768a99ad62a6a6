use std::fmt;
use std::hash::{Hash, Hasher};

use super::DomError;

/// A canonical sRGB color. Alpha is rounded to three decimals on parse so
/// that equality is channel-exact across input notations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Rgba {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub alpha: f64,
}

impl Eq for Rgba {}

impl Hash for Rgba {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.r, self.g, self.b, self.alpha.to_bits()).hash(state);
    }
}

impl Rgba {
    pub const TRANSPARENT: Rgba = Rgba {
        r: 0,
        g: 0,
        b: 0,
        alpha: 0.0,
    };

    pub fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self {
            r,
            g,
            b,
            alpha: 1.0,
        }
    }

    pub fn to_hex(&self) -> String {
        if self.alpha >= 1.0 {
            format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
        } else {
            let a = (self.alpha * 255.0).round() as u8;
            format!("#{:02x}{:02x}{:02x}{:02x}", self.r, self.g, self.b, a)
        }
    }
}

impl fmt::Display for Rgba {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alpha >= 1.0 {
            write!(f, "rgb({}, {}, {})", self.r, self.g, self.b)
        } else {
            write!(
                f,
                "rgba({}, {}, {}, {})",
                self.r, self.g, self.b, self.alpha
            )
        }
    }
}

impl std::str::FromStr for Rgba {
    type Err = DomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_color(s)
    }
}

fn canonical_alpha(a: f64) -> f64 {
    ((a.clamp(0.0, 1.0) * 1000.0).round()) / 1000.0
}

/// Parse a CSS color: hex, `rgb()`/`rgba()`, `hsl()`, or a named color.
/// `none` and `transparent` parse to fully transparent black.
pub fn parse_color(value: &str) -> Result<Rgba, DomError> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("none") || v.eq_ignore_ascii_case("transparent") {
        return Ok(Rgba::TRANSPARENT);
    }
    let color = csscolorparser::parse(v).map_err(|_| DomError::UnknownColor(value.to_string()))?;
    let [r, g, b, _] = color.to_rgba8();
    Ok(Rgba {
        r,
        g,
        b,
        alpha: canonical_alpha(color.a as f64),
    })
}
