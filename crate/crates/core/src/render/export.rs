//! Frame export: binary 16-bit PGM depth maps and CSV point clouds.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::render::camera::{LidarPattern, SensorImage};
use crate::Real;

/// Write a depth or range channel as binary PGM (`P5`, maxval 65535,
/// big-endian), quantized to millimeters. Invalid samples (negative input)
/// and anything beyond 65.535 m clamp to 0 and 65535.
pub fn write_pgm16<T: Real>(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    meters: &[T],
) -> io::Result<()> {
    assert_eq!(meters.len(), width * height);
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{width} {height}\n65535\n")?;
    for &v in meters {
        let mm = if v < T::zero() {
            0u16
        } else {
            let mm = (v * crate::real(1000.0)).round();
            mm.to_u64()
                .map_or(u16::MAX, |x| x.min(u16::MAX as u64) as u16)
        };
        out.write_all(&mm.to_be_bytes())?;
    }
    out.flush()
}

/// Read a binary `P5` PGM with maxval 65535 back into row-major samples.
pub fn read_pgm16(path: impl AsRef<Path>) -> io::Result<(usize, usize, Vec<u16>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());

    // Header: three whitespace-separated tokens after the magic, then one
    // whitespace byte, then the payload. '#' starts a comment to end of line.
    let mut pos = 0usize;
    let mut token = || -> io::Result<String> {
        let mut s = String::new();
        while pos < bytes.len() {
            let b = bytes[pos];
            if b == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                if !s.is_empty() {
                    break;
                }
                pos += 1;
            } else {
                s.push(b as char);
                pos += 1;
            }
        }
        if s.is_empty() {
            Err(bad("truncated pgm header"))
        } else {
            Ok(s)
        }
    };
    if token()? != "P5" {
        return Err(bad("not a binary pgm"));
    }
    let width: usize = token()?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = token()?.parse().map_err(|_| bad("bad height"))?;
    if token()? != "65535" {
        return Err(bad("expected 16-bit maxval"));
    }
    pos += 1;
    let payload = &bytes[pos..];
    if payload.len() != width * height * 2 {
        return Err(bad("payload size mismatch"));
    }
    let samples = payload
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((width, height, samples))
}

/// Sensor-frame points of every valid LiDAR return.
pub fn lidar_points<T: Real>(pattern: &LidarPattern<T>, img: &SensorImage<T>) -> Vec<Vector3<T>> {
    let mut points = Vec::with_capacity(img.num_valid());
    for (row, &el) in pattern.elevations.iter().enumerate() {
        for (col, &az) in pattern.azimuths.iter().enumerate() {
            let idx = img.index(col, row);
            if img.valid[idx] {
                points.push(LidarPattern::beam_dir(az, el) * img.range[idx]);
            }
        }
    }
    points
}

/// Write points as CSV with an `x,y,z` header.
pub fn write_point_cloud_csv<T: Real>(
    path: impl AsRef<Path>,
    points: &[Vector3<T>],
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "x,y,z")?;
    for p in points {
        writeln!(out, "{:?},{:?},{:?}", p.x, p.y, p.z)?;
    }
    out.flush()
}
