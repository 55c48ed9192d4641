//! End-to-end encode/decode and the experiment drivers built on them.

use crate::codebook::{dequantize, quantize, Codebook, IndexMap};
use crate::container::{self, StreamHeader};
use crate::entropy::{decode_indices, encode_indices};
use crate::error::{Error, Result};
use crate::image_io::Image;
use crate::metrics::{self, RdPoint};
use crate::restoration::{apply_loss, restore, ContextModel, LossPattern, MaskedIndexMap};
use crate::transform::{analyze, synthesize, TransformSpec};

/// An encoded image.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub stream: Vec<u8>,
    pub index_map: IndexMap,
    pub payload_len: usize,
}

/// A decoded stream.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub header: StreamHeader,
    pub index_map: IndexMap,
    pub image: Image,
}

/// analyze → quantize → entropy code → pack.
pub fn encode_image(img: &Image, spec: &TransformSpec, cb: &Codebook) -> Result<Encoded> {
    let grid = analyze(img, spec);
    let index_map = quantize(&grid, cb)?;
    let payload = encode_indices(index_map.indices(), cb.size())?;
    let header = StreamHeader::new(img.height(), img.width(), spec.dim(), cb.id(), cb.size(), payload.bytes.len())?;
    let stream = container::pack(&header, &payload)?;
    Ok(Encoded {
        stream,
        payload_len: payload.bytes.len(),
        index_map,
    })
}

/// Image synthesized from an index map through its codebook.
pub fn reconstruct(im: &IndexMap, cb: &Codebook, spec: &TransformSpec, height: usize, width: usize) -> Result<Image> {
    Ok(synthesize(&dequantize(im, cb)?, spec, height, width)?)
}

fn check_binding(header: &StreamHeader, cb: &Codebook) -> Result<()> {
    if header.codebook_id != cb.id() || usize::from(header.k) != cb.size() || usize::from(header.n_z) != cb.dim() {
        return Err(Error::Binding {
            stream: header.codebook_id,
            stream_k: header.k.into(),
            stream_dim: header.n_z.into(),
            codebook: cb.id(),
            codebook_k: cb.size(),
            codebook_dim: cb.dim(),
        });
    }
    Ok(())
}

/// unpack → entropy decode → index map, without synthesis.
pub fn decode_indices_from_stream(bytes: &[u8], cb: &Codebook) -> Result<(StreamHeader, IndexMap)> {
    let (header, payload) = container::unpack(bytes)?;
    check_binding(&header, cb)?;
    let indices = decode_indices(&payload)?;
    let im = IndexMap::new(header.grid_h(), header.grid_w(), cb.size(), cb.id(), indices)?;
    Ok((header, im))
}

/// Full inverse of [`encode_image`].
pub fn decode_stream(bytes: &[u8], cb: &Codebook) -> Result<Decoded> {
    let (header, index_map) = decode_indices_from_stream(bytes, cb)?;
    let spec = TransformSpec::new(cb.dim())?;
    let image = reconstruct(&index_map, cb, &spec, header.true_height as usize, header.true_width as usize)?;
    Ok(Decoded {
        header,
        index_map,
        image,
    })
}

/// Rate and fidelity of one encoded image.
pub fn rd_point(original: &Image, encoded: &Encoded, cb: &Codebook, spec: &TransformSpec) -> Result<RdPoint> {
    let (h, w) = (original.height(), original.width());
    let recon = reconstruct(&encoded.index_map, cb, spec, h, w)?;
    let (bpp_file, bpp_payload) = metrics::bpp(encoded.stream.len(), encoded.payload_len, h, w);
    Ok(RdPoint {
        bpp_payload,
        bpp_file,
        psnr_db: metrics::psnr(original, &recon)?,
        index_accuracy: None,
        codebook_size: cb.size(),
        alpha: None,
    })
}

/// Output of an R-D sweep.
#[derive(Debug, Clone, Default)]
pub struct RdCurve {
    /// One row per (image, K), images in input order within each K.
    pub rows: Vec<(String, RdPoint)>,
    /// One `"mean"` row per K.
    pub means: Vec<(String, RdPoint)>,
    /// Encoded streams keyed like `<image>_K<k>`.
    pub streams: Vec<(String, Vec<u8>)>,
}

impl RdCurve {
    pub fn all_rows(&self) -> Vec<(String, RdPoint)> {
        self.rows.iter().chain(&self.means).cloned().collect()
    }
}

fn mean_point(points: &[&RdPoint], k: usize) -> RdPoint {
    let n = points.len().max(1) as f64;
    let finite: Vec<f64> = points.iter().map(|p| p.psnr_db).filter(|v| v.is_finite()).collect();
    RdPoint {
        bpp_payload: points.iter().map(|p| p.bpp_payload).sum::<f64>() / n,
        bpp_file: points.iter().map(|p| p.bpp_file).sum::<f64>() / n,
        psnr_db: if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        index_accuracy: None,
        codebook_size: k,
        alpha: None,
    }
}

/// Encodes every image with every codebook.
pub fn rd_curve(images: &[(String, Image)], codebooks: &[Codebook]) -> Result<RdCurve> {
    let mut curve = RdCurve::default();
    for cb in codebooks {
        let spec = TransformSpec::new(cb.dim())?;
        let start = curve.rows.len();
        for (name, img) in images {
            let enc = encode_image(img, &spec, cb)?;
            curve.rows.push((name.clone(), rd_point(img, &enc, cb, &spec)?));
            curve.streams.push((format!("{}_K{}", stem(name), cb.size()), enc.stream));
        }
        let points: Vec<&RdPoint> = curve.rows[start..].iter().map(|(_, p)| p).collect();
        curve.means.push(("mean".to_owned(), mean_point(&points, cb.size())));
    }
    Ok(curve)
}

fn stem(name: &str) -> &str {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    base.rsplit_once('.').map_or(base, |(s, _)| s)
}

/// Result of a simulated-loss run.
#[derive(Debug, Clone)]
pub struct LossOutcome {
    pub masked: MaskedIndexMap,
    pub restored: IndexMap,
    pub image: Image,
    pub point: RdPoint,
}

/// decode → mask → restore → synthesize. PSNR and index accuracy are measured
/// against the loss-free decode.
pub fn simulate_loss(
    stream: &[u8],
    cb: &Codebook,
    model: &ContextModel,
    alpha: f64,
    seed: u64,
    pattern: LossPattern,
) -> Result<LossOutcome> {
    let decoded = decode_stream(stream, cb)?;
    let spec = TransformSpec::new(cb.dim())?;
    let masked = apply_loss(&decoded.index_map, alpha, seed, pattern);
    let restored = restore(&masked, model)?;
    let (h, w) = (decoded.image.height(), decoded.image.width());
    let image = reconstruct(&restored, cb, &spec, h, w)?;
    let payload_len = decoded.header.payload_len as usize;
    let (bpp_file, bpp_payload) = metrics::bpp(stream.len(), payload_len, h, w);
    let point = RdPoint {
        bpp_payload,
        bpp_file,
        psnr_db: metrics::psnr(&decoded.image, &image)?,
        index_accuracy: Some(restored.agreement(&decoded.index_map)),
        codebook_size: cb.size(),
        alpha: Some(alpha),
    };
    Ok(LossOutcome {
        masked,
        restored,
        image,
        point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::train_root;
    use crate::synth;

    fn setup() -> (Image, TransformSpec, Codebook) {
        let img = synth::natural_image(72, 40, 11);
        let spec = TransformSpec::new(16).unwrap();
        let training: Vec<_> = (0..4).map(|s| analyze(&synth::natural_image(64, 64, s), &spec)).collect();
        let cb = train_root(&training, 32, 1).unwrap().codebook;
        (img, spec, cb)
    }

    #[test]
    fn decode_inverts_encode() {
        let (img, spec, cb) = setup();
        let enc = encode_image(&img, &spec, &cb).unwrap();
        let dec = decode_stream(&enc.stream, &cb).unwrap();
        assert_eq!(dec.index_map, enc.index_map);
        let direct = synthesize(
            &dequantize(&quantize(&analyze(&img, &spec), &cb).unwrap(), &cb).unwrap(),
            &spec,
            40,
            72,
        )
        .unwrap();
        assert_eq!(dec.image, direct);
    }

    #[test]
    fn binding_mismatch() {
        let (img, spec, cb) = setup();
        let enc = encode_image(&img, &spec, &cb).unwrap();
        let other = Codebook::new(16, vec![0.0; 32 * 16].iter().enumerate().map(|(i, _)| i as f32).collect()).unwrap();
        assert!(matches!(decode_stream(&enc.stream, &other), Err(Error::Binding { .. })));
    }

    #[test]
    fn zero_loss_matches_plain_decode() {
        let (img, spec, cb) = setup();
        let enc = encode_image(&img, &spec, &cb).unwrap();
        let model = crate::restoration::train_predictor(std::slice::from_ref(&enc.index_map), cb.size()).unwrap();
        let out = simulate_loss(&enc.stream, &cb, &model, 0.0, 3, LossPattern::Uniform).unwrap();
        assert_eq!(out.image, decode_stream(&enc.stream, &cb).unwrap().image);
        assert_eq!(out.point.index_accuracy, Some(1.0));
        assert_eq!(out.point.psnr_db, f64::INFINITY);
    }

    #[test]
    fn rd_curve_shapes() {
        let (img, _, cb) = setup();
        let images = vec![("a/b/scene.ppm".to_owned(), img.clone()), ("two.ppm".to_owned(), img)];
        let curve = rd_curve(&images, std::slice::from_ref(&cb)).unwrap();
        assert_eq!(curve.rows.len(), 2);
        assert_eq!(curve.means.len(), 1);
        assert_eq!(curve.streams[0].0, format!("scene_K{}", cb.size()));
        assert!(curve.rows.iter().all(|(_, p)| p.bpp_file > p.bpp_payload));
    }
}
