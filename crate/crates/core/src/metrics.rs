//! Rate and fidelity measurement.

use std::io::Write;

use thiserror::Error;

use crate::image_io::Image;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("image dimensions differ: {0:?} vs {1:?}")]
pub struct DimensionMismatch(pub (usize, usize), pub (usize, usize));

fn check_dims(a: &Image, b: &Image) -> Result<(), DimensionMismatch> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(DimensionMismatch((a.width(), a.height()), (b.width(), b.height())));
    }
    Ok(())
}

/// Mean squared error over all samples of all channels.
pub fn mse(a: &Image, b: &Image) -> Result<f64, DimensionMismatch> {
    check_dims(a, b)?;
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = u64::from(x.abs_diff(y));
            d * d
        })
        .sum();
    Ok(sum as f64 / a.pixels().len() as f64)
}

/// Peak signal-to-noise ratio in dB; identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64, DimensionMismatch> {
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / err).log10())
}

/// Bits per pixel of a byte count over an `height`x`width` image.
pub fn bits_per_pixel(bytes: usize, height: usize, width: usize) -> f64 {
    assert!(height > 0 && width > 0, "bpp needs positive dimensions");
    8.0 * bytes as f64 / (height * width) as f64
}

/// `(bpp_file, bpp_payload)` for a stream and its entropy-coded payload.
pub fn bpp(stream_bytes: usize, payload_bytes: usize, height: usize, width: usize) -> (f64, f64) {
    (
        bits_per_pixel(stream_bytes, height, width),
        bits_per_pixel(payload_bytes, height, width),
    )
}

/// Upper bound on payload bpp if every index were stored with `ceil(log2 K)` bits.
pub fn raw_index_bpp(cells: usize, k: usize, height: usize, width: usize) -> f64 {
    let bits = usize::BITS - (k.max(2) - 1).leading_zeros();
    f64::from(bits) * cells as f64 / (height * width) as f64
}

/// One point of a rate-distortion or restoration experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub bpp_payload: f64,
    pub bpp_file: f64,
    pub psnr_db: f64,
    pub index_accuracy: Option<f64>,
    pub codebook_size: usize,
    pub alpha: Option<f64>,
}

/// Column header of every emitted metrics CSV.
pub const CSV_HEADER: [&str; 7] = ["image", "K", "alpha", "bpp_payload", "bpp_file", "psnr_db", "index_accuracy"];

fn fmt_psnr(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_owned()
    } else {
        format!("{db:.4}")
    }
}

/// Writes `rows` as CSV with [`CSV_HEADER`]; optional fields become empty cells.
pub fn write_csv<W: Write>(out: W, rows: &[(String, RdPoint)]) -> csv::Result<()> {
    emit(out, rows, true)
}

/// Like [`write_csv`] but without the header line, for appending to an
/// existing table.
pub fn append_csv<W: Write>(out: W, rows: &[(String, RdPoint)]) -> csv::Result<()> {
    emit(out, rows, false)
}

fn emit<W: Write>(out: W, rows: &[(String, RdPoint)], header: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(CSV_HEADER)?;
    }
    for (image, p) in rows {
        w.write_record([
            image.clone(),
            p.codebook_size.to_string(),
            p.alpha.map(|a| format!("{a:.3}")).unwrap_or_default(),
            format!("{:.6}", p.bpp_payload),
            format!("{:.6}", p.bpp_file),
            fmt_psnr(p.psnr_db),
            p.index_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_closed_forms() {
        let a = Image::filled(4, 3, 10);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = Image::filled(4, 3, 11);
        let db = psnr(&a, &b).unwrap();
        assert!((db - 10.0 * 65025f64.log10()).abs() < 1e-12);
        assert!((db - 48.13).abs() < 0.005);
        assert_eq!(psnr(&Image::filled(1, 1, 0), &Image::filled(1, 1, 255)).unwrap(), 0.0);
    }

    #[test]
    fn psnr_is_symmetric() {
        let a = crate::synth::natural_image(20, 20, 1);
        let b = crate::synth::natural_image(20, 20, 2);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(psnr(&Image::filled(2, 2, 0), &Image::filled(2, 3, 0)).is_err());
    }

    #[test]
    fn bpp_examples() {
        let (_, p) = bpp(600, 592, 512, 768);
        assert!((p - 0.012044).abs() < 1e-6);
        assert_eq!(bpp(26, 0, 512, 768).1, 0.0);
        assert!((raw_index_bpp(1536, 2048, 512, 768) - 0.04296875).abs() < 1e-12);
        assert!((raw_index_bpp(1536, 8, 512, 768) - 0.01171875).abs() < 1e-12);
        // linear in the byte count
        assert_eq!(bits_per_pixel(200, 10, 10), 2.0 * bits_per_pixel(100, 10, 10));
    }

    #[test]
    fn csv_layout() {
        let rows = vec![(
            "a.ppm".to_owned(),
            RdPoint {
                bpp_payload: 0.0125,
                bpp_file: 0.013,
                psnr_db: f64::INFINITY,
                index_accuracy: None,
                codebook_size: 8,
                alpha: None,
            },
        )];
        let mut out = Vec::new();
        write_csv(&mut out, &rows).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "image,K,alpha,bpp_payload,bpp_file,psnr_db,index_accuracy\na.ppm,8,,0.012500,0.013000,inf,\n"
        );
    }
}
