use super::DomError;

/// 2×3 affine matrix `[a c e; b d f]` mapping `(x, y)` to
/// `(a·x + c·y + e, b·x + d·y + f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform2D {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Default for Transform2D {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Transform2D {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        e: 0.0,
        f: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Self { a, b, c, d, e, f }
    }

    pub fn translate(tx: f64, ty: f64) -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0, tx, ty)
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        Self::new(sx, 0.0, 0.0, sy, 0.0, 0.0)
    }

    pub fn rotate_degrees(angle: f64) -> Self {
        let (sin, cos) = angle.to_radians().sin_cos();
        Self::new(cos, sin, -sin, cos, 0.0, 0.0)
    }

    /// `self · inner`: the result applies `inner` first, then `self`.
    pub fn then(&self, inner: &Transform2D) -> Transform2D {
        Transform2D {
            a: self.a * inner.a + self.c * inner.b,
            b: self.b * inner.a + self.d * inner.b,
            c: self.a * inner.c + self.c * inner.d,
            d: self.b * inner.c + self.d * inner.d,
            e: self.a * inner.e + self.c * inner.f + self.e,
            f: self.b * inner.e + self.d * inner.f + self.f,
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.c * y + self.e,
            self.b * x + self.d * y + self.f,
        )
    }

    /// Length scale factor along the x and y axes.
    pub fn scale_factors(&self) -> (f64, f64) {
        (self.a.hypot(self.b), self.c.hypot(self.d))
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn translation(&self) -> (f64, f64) {
        (self.e, self.f)
    }
}

/// Parse an SVG `transform` list. Functions compose left to right, so the
/// rightmost function is applied to coordinates first.
pub fn parse_transform(attr: &str) -> Result<Transform2D, DomError> {
    let mut result = Transform2D::IDENTITY;
    let mut rest = attr.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| malformed(rest))?;
        let name = rest[..open].trim().trim_start_matches(',').trim();
        let close = rest[open..].find(')').ok_or_else(|| malformed(rest))? + open;
        let args = parse_args(&rest[open + 1..close]).map_err(|_| malformed(&rest[..=close]))?;
        let token = &rest[..=close];
        let m = match (name, args.as_slice()) {
            ("translate", [tx]) => Transform2D::translate(*tx, 0.0),
            ("translate", [tx, ty]) => Transform2D::translate(*tx, *ty),
            ("scale", [s]) => Transform2D::scale(*s, *s),
            ("scale", [sx, sy]) => Transform2D::scale(*sx, *sy),
            ("rotate", [angle]) => Transform2D::rotate_degrees(*angle),
            ("rotate", [angle, cx, cy]) => Transform2D::translate(*cx, *cy)
                .then(&Transform2D::rotate_degrees(*angle))
                .then(&Transform2D::translate(-cx, -cy)),
            ("skewX", [angle]) => {
                Transform2D::new(1.0, 0.0, angle.to_radians().tan(), 1.0, 0.0, 0.0)
            }
            ("skewY", [angle]) => {
                Transform2D::new(1.0, angle.to_radians().tan(), 0.0, 1.0, 0.0, 0.0)
            }
            ("matrix", [a, b, c, d, e, f]) => Transform2D::new(*a, *b, *c, *d, *e, *f),
            _ => return Err(malformed(token)),
        };
        if args.iter().any(|v| !v.is_finite()) {
            return Err(malformed(token));
        }
        result = result.then(&m);
        rest = rest[close + 1..]
            .trim_start()
            .trim_start_matches(',')
            .trim_start();
    }
    Ok(result)
}

fn malformed(token: &str) -> DomError {
    DomError::MalformedTransform {
        token: token.trim().to_string(),
    }
}

fn parse_args(s: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}
