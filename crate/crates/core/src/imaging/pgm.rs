use super::{ImageGray, ImagingError};

/// PGM encoding written by [`write_pgm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmVariant {
    /// ASCII samples.
    P2,
    /// Binary samples.
    P5,
}

/// Header tokenizer that skips whitespace and `#` comments.
struct Header<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip(&mut self) {
        while self.pos < self.b.len() {
            match self.b[self.pos] {
                b'#' => {
                    while self.pos < self.b.len() && self.b[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip();
        let start = self.pos;
        while self.pos < self.b.len()
            && !self.b[self.pos].is_ascii_whitespace()
            && self.b[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.b[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize, ImagingError> {
        let t = self
            .token()
            .ok_or_else(|| ImagingError::BadHeader(format!("missing {what}")))?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                ImagingError::BadHeader(format!("bad {what} `{}`", String::from_utf8_lossy(t)))
            })
    }
}

/// Reads a P2 or P5 grayscale image with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<ImageGray, ImagingError> {
    let mut h = Header { b: bytes, pos: 0 };
    let binary = match h.token() {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(ImagingError::BadMagic),
    };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImagingError::BadHeader(format!(
            "empty image {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(ImagingError::UnsupportedMaxval(maxval));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| ImagingError::BadHeader("image too large".into()))?;
    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the samples.
        let start = h.pos + 1;
        let data = bytes.get(start..).unwrap_or(&[]);
        if data.len() < n {
            return Err(ImagingError::TruncatedData {
                expected: n,
                found: data.len(),
            });
        }
        data[..n].to_vec()
    } else {
        let mut px = Vec::with_capacity(n);
        while px.len() < n {
            let Some(t) = h.token() else {
                return Err(ImagingError::TruncatedData {
                    expected: n,
                    found: px.len(),
                });
            };
            let v: usize = std::str::from_utf8(t)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ImagingError::BadSample(String::from_utf8_lossy(t).into_owned()))?;
            if v > 255 {
                return Err(ImagingError::BadSample(v.to_string()));
            }
            px.push(v as u8);
        }
        px
    };
    ImageGray::new(width, height, pixels)
}

/// Encodes an image; no comments are emitted.
pub fn write_pgm(img: &ImageGray, variant: PgmVariant) -> Vec<u8> {
    let magic = match variant {
        PgmVariant::P2 => "P2",
        PgmVariant::P5 => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    match variant {
        PgmVariant::P5 => out.extend_from_slice(&img.pixels),
        PgmVariant::P2 => {
            for row in img.pixels.chunks(img.width) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::gen_gaussian_image;

    #[test]
    fn reads_tiny_ascii_image() {
        let img = read_pgm(b"P2\n1 1\n255\n255\n").unwrap();
        assert_eq!(
            (img.width, img.height, img.pixels.clone()),
            (1, 1, vec![255])
        );
    }

    #[test]
    fn tolerates_comments() {
        let img = read_pgm(b"P2 # made by hand\n# size\n2 1\n255\n7 # first\n9\n").unwrap();
        assert_eq!(img.pixels, vec![7, 9]);
    }

    #[test]
    fn round_trips_both_variants() {
        let img = gen_gaussian_image(65, 10.0).unwrap();
        for v in [PgmVariant::P2, PgmVariant::P5] {
            let bytes = write_pgm(&img, v);
            assert_eq!(read_pgm(&bytes).unwrap(), img);
            assert_eq!(write_pgm(&read_pgm(&bytes).unwrap(), v), bytes);
        }
    }

    #[test]
    fn binary_samples_may_look_like_comments() {
        let img = ImageGray::new(3, 1, vec![b'#', b'\n', 32]).unwrap();
        assert_eq!(read_pgm(&write_pgm(&img, PgmVariant::P5)).unwrap(), img);
    }

    #[test]
    fn reports_malformed_input() {
        assert!(matches!(
            read_pgm(b"P6\n1 1\n255\n\0"),
            Err(ImagingError::BadMagic)
        ));
        assert!(matches!(read_pgm(b""), Err(ImagingError::BadMagic)));
        assert!(matches!(
            read_pgm(b"P5\n2 x\n255\n"),
            Err(ImagingError::BadHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P5\n2 2\n65535\n"),
            Err(ImagingError::UnsupportedMaxval(65535))
        ));
        assert!(matches!(
            read_pgm(b"P5\n2 2\n255\n\x01\x02\x03"),
            Err(ImagingError::TruncatedData {
                expected: 4,
                found: 3
            })
        ));
        assert!(matches!(
            read_pgm(b"P2\n2 1\n255\n1\n"),
            Err(ImagingError::TruncatedData { .. })
        ));
        assert!(matches!(
            read_pgm(b"P2\n1 1\n255\n256\n"),
            Err(ImagingError::BadSample(_))
        ));
    }
}
