//! Binary PGM (P5) dumps.
//!
//! 16-bit images are written big-endian with maxval 65535; 8-bit images use maxval 255.

use std::io::{self, Read, Write};

use crate::geometry::DepthImage;
use crate::scene::RenderOutput;

pub fn write_u16<W: Write>(mut w: W, width: usize, height: usize, values: &[u16]) -> io::Result<()> {
    write!(w, "P5\n{width} {height}\n65535\n")?;
    let mut buf = Vec::with_capacity(values.len() * 2);
    for v in values {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    w.write_all(&buf)
}

pub fn write_u8<W: Write>(mut w: W, width: usize, height: usize, values: &[u8]) -> io::Result<()> {
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(values)
}

/// Depth in millimeters, rounded; 0 stays invalid.
pub fn depth_to_mm(depth: &DepthImage) -> Vec<u16> {
    depth.data.iter().map(|&d| (d * 1000.0).round().clamp(0.0, 65535.0) as u16).collect()
}

pub fn write_depth<W: Write>(w: W, depth: &DepthImage) -> io::Result<()> {
    write_u16(w, depth.width, depth.height, &depth_to_mm(depth))
}

/// Class codes: 0 background, 1 object, 2 hand, 3 body.
pub fn write_classes<W: Write>(w: W, render: &RenderOutput) -> io::Result<()> {
    let codes: Vec<u8> = render.class_image.iter().map(|l| l.code()).collect();
    write_u8(w, render.width(), render.height(), &codes)
}

/// Parsed P5 image; samples widened to u16.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

pub fn read<R: Read>(mut r: R) -> io::Result<Pgm> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    let n = width * height;
    let data = &bytes[pos.min(bytes.len())..];
    let samples = if maxval > 255 {
        if data.len() < 2 * n {
            return Err(bad("truncated raster"));
        }
        data.chunks_exact(2).take(n).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        if data.len() < n {
            return Err(bad("truncated raster"));
        }
        data[..n].iter().map(|&b| b as u16).collect()
    };
    Ok(Pgm { width, height, maxval: maxval as u16, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_dump_is_big_endian_millimeters() {
        let depth = DepthImage::new(2, 1, vec![0.0, 1.2345]).unwrap();
        let mut out = Vec::new();
        write_depth(&mut out, &depth).unwrap();
        let header = b"P5\n2 1\n65535\n";
        assert_eq!(&out[..header.len()], header);
        assert_eq!(&out[header.len()..], &[0, 0, 0x04, 0xD3]); // 1235 mm
        let back = read(&out[..]).unwrap();
        assert_eq!(back.samples, vec![0, 1235]);
    }
}
