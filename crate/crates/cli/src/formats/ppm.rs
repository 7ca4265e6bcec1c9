//! Binary PPM (P6, 8-bit) image IO.

use std::io::{Read, Write};

use anyhow::{bail, Context};
use symground_core::scene::Raster;

pub fn write<W: Write>(raster: &Raster, mut writer: W) -> anyhow::Result<()> {
    write!(writer, "P6\n{} {}\n255\n", raster.width(), raster.height())?;
    writer.write_all(raster.raw())?;
    Ok(())
}

pub fn write_file(raster: &Raster, path: &std::path::Path) -> anyhow::Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    write(raster, std::io::BufWriter::new(file))
}

pub fn read<R: Read>(mut reader: R) -> anyhow::Result<Raster> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let mut pos = 0usize;

    let mut token = |bytes: &[u8]| -> anyhow::Result<String> {
        // Skip whitespace and `#` comment lines between header fields.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            bail!("truncated PPM header");
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token(&bytes)?;
    if magic != "P6" {
        bail!("expected P6 magic, found `{magic}`");
    }
    let width: usize = token(&bytes)?.parse().context("PPM width")?;
    let height: usize = token(&bytes)?.parse().context("PPM height")?;
    let maxval: usize = token(&bytes)?.parse().context("PPM maxval")?;
    if maxval != 255 {
        bail!("only 8-bit PPM supported, maxval was {maxval}");
    }
    // Exactly one whitespace byte separates the header from the data.
    pos += 1;
    let needed = width * height * 3;
    if bytes.len() < pos + needed {
        bail!("PPM data truncated: need {needed} bytes, found {}", bytes.len() - pos);
    }
    Ok(Raster::from_raw(width, height, bytes[pos..pos + needed].to_vec()))
}

pub fn read_file(path: &std::path::Path) -> anyhow::Result<Raster> {
    let file =
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read(std::io::BufReader::new(file))
}
