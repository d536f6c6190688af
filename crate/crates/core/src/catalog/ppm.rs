//! Binary PPM (P6, maxval 255) encoding of 64×64 stimuli.

use super::{CatalogError, Pixels, IMAGE_SIDE};

pub fn encode_ppm(pixels: &Pixels) -> Vec<u8> {
    let mut out = format!("P6\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n").into_bytes();
    out.extend_from_slice(pixels.as_bytes());
    out
}

/// Parse a P6 image; must be 64×64 with maxval 255. Header comments are
/// accepted.
pub fn decode_ppm(bytes: &[u8]) -> Result<Pixels, CatalogError> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(CatalogError::Format("truncated PPM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P6" {
        return Err(CatalogError::Format(format!("expected P6, got {}", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| CatalogError::Format(format!("bad PPM header field {s:?}")))
    };
    let (w, h, max) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if w != IMAGE_SIDE || h != IMAGE_SIDE || max != 255 {
        return Err(CatalogError::Format(format!(
            "expected {IMAGE_SIDE}x{IMAGE_SIDE} maxval 255, got {w}x{h} maxval {max}"
        )));
    }
    let raster = bytes.get(pos..).unwrap_or_default();
    Pixels::new(raster.to_vec()).map_err(|e| CatalogError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::IMAGE_LEN;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>()) {
            let bytes: Vec<u8> = (0..IMAGE_LEN as u64).map(|i| (i.wrapping_mul(seed | 1) >> 3) as u8).collect();
            let px = Pixels::new(bytes).unwrap();
            prop_assert_eq!(decode_ppm(&encode_ppm(&px)).unwrap(), px);
        }
    }

    #[test]
    fn header_is_exact() {
        let px = Pixels::new(vec![7; IMAGE_LEN]).unwrap();
        let enc = encode_ppm(&px);
        assert!(enc.starts_with(b"P6\n64 64\n255\n"));
        assert_eq!(enc.len(), 13 + IMAGE_LEN);
    }

    #[test]
    fn rejects_wrong_size_and_magic() {
        let mut data = b"P6\n32 32\n255\n".to_vec();
        data.extend(vec![0; 32 * 32 * 3]);
        assert!(decode_ppm(&data).is_err());
        let mut data = b"P5\n64 64\n255\n".to_vec();
        data.extend(vec![0; IMAGE_LEN]);
        assert!(decode_ppm(&data).is_err());
        assert!(decode_ppm(b"P6\n64").is_err());
    }

    #[test]
    fn accepts_comments() {
        let mut data = b"P6\n# made by hand\n64 64\n255\n".to_vec();
        data.extend(vec![1; IMAGE_LEN]);
        assert_eq!(decode_ppm(&data).unwrap().as_bytes()[0], 1);
    }
}
