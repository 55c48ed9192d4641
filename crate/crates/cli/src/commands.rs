use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use vqic_core::codebook::file::{read_codebook, write_codebook};
use vqic_core::codebook::{cluster_ladder, quantize, train_root_with, Codebook};
use vqic_core::restoration::model_file::{read_model, write_model};
use vqic_core::restoration::train_predictor_with;
use vqic_core::{container, metrics, pipeline, synth, Config, Error, Image, LatentGrid, TransformSpec};

use crate::{Cli, Command};

/// Failures that originate in the command layer rather than the codec.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("no training images: {0} contains no .ppm files")]
    NoImages(PathBuf),
    #[error("{0}")]
    BadArgument(String),
    #[error("{0}: unrecognized file type")]
    UnknownFile(PathBuf),
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = read_text(path)?;
            Config::from_toml(&text).with_context(|| format!("loading config {}", path.display()))?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::TrainCodebook(a) => {
            set(&mut cfg.root_size, a.k);
            set(&mut cfg.n_z, a.n_z);
            set(&mut cfg.lloyd_max_iters, a.max_iters);
            validated(&cfg)?;
            train_codebook(&cfg, &a.images, &a.out)
        }
        Command::Cluster(a) => {
            set(&mut cfg.ladder, a.ladder);
            set(&mut cfg.lloyd_max_iters, a.max_iters);
            validated(&cfg)?;
            cluster(&cfg, &a.root, a.images.as_deref(), &a.out_dir)
        }
        Command::Encode(a) => encode(&a.input, &a.codebook, &a.out),
        Command::Decode(a) => decode(&a.input, &a.codebook, &a.out),
        Command::TrainPredictor(a) => {
            set(&mut cfg.context_size, a.context_size);
            set(&mut cfg.backoff_levels, a.backoff_levels);
            validated(&cfg)?;
            train_predictor(&cfg, &a.images, &a.codebook, &a.out)
        }
        Command::SimulateLoss(a) => {
            set(&mut cfg.loss_burst, a.loss_burst);
            validated(&cfg)?;
            if !(0.0..=1.0).contains(&a.alpha) {
                return Err(CliError::BadArgument(format!("--alpha {} outside [0, 1]", a.alpha)).into());
            }
            simulate_loss(&cfg, &a)
        }
        Command::RdCurve(a) => rd_curve(&a),
        Command::Inspect(a) => inspect(&a.file),
        Command::SynthImages(a) => synth_images(&cfg, &a),
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn validated(cfg: &Config) -> Result<()> {
    cfg.validate()?;
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    Ok(fs::read(path).map_err(|e| io_error(path, e))?)
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path).map_err(|e| io_error(path, e))?)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    Ok(fs::write(path, bytes).map_err(|e| io_error(path, e))?)
}

fn create_dir(path: &Path) -> Result<()> {
    Ok(fs::create_dir_all(path).map_err(|e| io_error(path, e))?)
}

fn load_image(path: &Path) -> Result<Image> {
    let bytes = read_bytes(path)?;
    let img = vqic_core::read_ppm(&bytes)
        .map_err(Error::from)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(img)
}

fn load_codebook(path: &Path) -> Result<Codebook> {
    let bytes = read_bytes(path)?;
    read_codebook(&bytes)
        .map_err(Error::from)
        .with_context(|| format!("reading codebook {}", path.display()))
}

/// `.ppm` files of `dir`, sorted by file name so runs are reproducible.
fn image_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")) && path.is_file() {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(CliError::NoImages(dir.to_owned()).into());
    }
    paths.sort();
    Ok(paths)
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn load_latents(dir: &Path, spec: &TransformSpec) -> Result<Vec<LatentGrid>> {
    image_paths(dir)?
        .iter()
        .map(|p| Ok(vqic_core::analyze(&load_image(p)?, spec)))
        .collect()
}

fn train_codebook(cfg: &Config, images: &Path, out: &Path) -> Result<()> {
    let spec = TransformSpec::new(cfg.n_z).map_err(Error::from)?;
    let grids = load_latents(images, &spec)?;
    let trained = train_root_with(&grids, cfg.root_size, cfg.seed, &cfg.lloyd()).map_err(Error::from)?;
    write_bytes(out, &write_codebook(&trained.codebook))?;
    println!(
        "codebook {:016x}: K={} n_z={} from {} vectors, {} Lloyd iterations, final distortion {:.6}",
        trained.codebook.id(),
        trained.codebook.size(),
        trained.codebook.dim(),
        grids.iter().map(LatentGrid::cells).sum::<usize>(),
        trained.iterations(),
        trained.final_distortion()
    );
    Ok(())
}

fn cluster(cfg: &Config, root: &Path, images: Option<&Path>, out_dir: &Path) -> Result<()> {
    let root = load_codebook(root)?;
    let spec = TransformSpec::new(root.dim()).map_err(Error::from)?;
    let grids = images.map(|dir| load_latents(dir, &spec)).transpose()?;
    let ladder = cluster_ladder(&root, &cfg.ladder, grids.as_deref(), cfg.seed, &cfg.lloyd()).map_err(Error::from)?;
    create_dir(out_dir)?;
    for entry in &ladder {
        let cb = entry.codebook();
        write_bytes(&out_dir.join(format!("K{}.vqcb", cb.size())), &write_codebook(cb))?;
        match &entry.refined {
            Some(r) => println!(
                "K={:<5} clustered distortion {:.6}, refined distortion {:.6} after {} iterations",
                cb.size(),
                entry.clustered.final_distortion(),
                r.final_distortion(),
                r.iterations()
            ),
            None => println!("K={:<5} clustered distortion {:.6}", cb.size(), entry.clustered.final_distortion()),
        }
    }
    Ok(())
}

fn encode(input: &Path, codebook: &Path, out: &Path) -> Result<()> {
    let img = load_image(input)?;
    let cb = load_codebook(codebook)?;
    let spec = TransformSpec::new(cb.dim()).map_err(Error::from)?;
    let enc = pipeline::encode_image(&img, &spec, &cb)?;
    write_bytes(out, &enc.stream)?;
    let (bpp_file, bpp_payload) = metrics::bpp(enc.stream.len(), enc.payload_len, img.height(), img.width());
    println!(
        "{} bytes ({} payload): bpp_payload {bpp_payload:.6}, bpp_file {bpp_file:.6}",
        enc.stream.len(),
        enc.payload_len
    );
    Ok(())
}

fn decode(input: &Path, codebook: &Path, out: &Path) -> Result<()> {
    let stream = read_bytes(input)?;
    let cb = load_codebook(codebook)?;
    let dec = pipeline::decode_stream(&stream, &cb)?;
    write_bytes(out, &vqic_core::write_ppm(&dec.image))?;
    Ok(())
}

fn train_predictor(cfg: &Config, images: &Path, codebook: &Path, out: &Path) -> Result<()> {
    let cb = load_codebook(codebook)?;
    let spec = TransformSpec::new(cb.dim()).map_err(Error::from)?;
    let maps = load_latents(images, &spec)?
        .iter()
        .map(|g| quantize(g, &cb))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Error::from)?;
    let model = train_predictor_with(&maps, cb.size(), cfg.predictor()).map_err(Error::from)?;
    write_bytes(out, &write_model(&model))?;
    println!(
        "predictor: K={} over {} tokens, {} contexts, training NLL {:.4} bits/index (uniform {:.4})",
        model.alphabet(),
        model.trained_tokens(),
        model.contexts(),
        model.training_nll(),
        (model.alphabet() as f64).log2()
    );
    Ok(())
}

fn simulate_loss(cfg: &Config, a: &crate::SimulateLossArgs) -> Result<()> {
    let stream = read_bytes(&a.stream)?;
    let cb = load_codebook(&a.codebook)?;
    let model = read_model(&read_bytes(&a.model)?)
        .map_err(Error::from)
        .with_context(|| format!("reading predictor {}", a.model.display()))?;
    let outcome = pipeline::simulate_loss(&stream, &cb, &model, a.alpha, cfg.seed, cfg.loss_pattern())?;
    write_bytes(&a.out_image, &vqic_core::write_ppm(&outcome.image))?;
    let rows = [(file_name(&a.stream), outcome.point.clone())];
    let mut buf = Vec::new();
    if a.append && a.out_csv.exists() {
        metrics::append_csv(&mut buf, &rows).map_err(Error::from)?;
        let mut f = fs::OpenOptions::new()
            .append(true)
            .open(&a.out_csv)
            .map_err(|e| io_error(&a.out_csv, e))?;
        f.write_all(&buf).map_err(|e| io_error(&a.out_csv, e))?;
    } else {
        metrics::write_csv(&mut buf, &rows).map_err(Error::from)?;
        write_bytes(&a.out_csv, &buf)?;
    }
    println!(
        "lost {} of {} indices; index accuracy {:.4}, PSNR vs loss-free decode {:.2} dB",
        outcome.masked.lost(),
        outcome.restored.len(),
        outcome.point.index_accuracy.unwrap_or(1.0),
        outcome.point.psnr_db
    );
    Ok(())
}

fn rd_curve(a: &crate::RdCurveArgs) -> Result<()> {
    let mut cb_paths = a.codebooks.clone();
    if let Some(dir) = &a.codebook_dir {
        let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| io_error(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "vqcb") {
                cb_paths.push(path);
            }
        }
    }
    if cb_paths.is_empty() {
        return Err(CliError::BadArgument("rd-curve needs at least one --codebook or a --codebook-dir".into()).into());
    }
    let mut codebooks = cb_paths.iter().map(|p| load_codebook(p)).collect::<Result<Vec<_>>>()?;
    // Largest first, ties by id, independent of directory enumeration order.
    codebooks.sort_by_key(|cb| (std::cmp::Reverse(cb.size()), cb.id()));
    let images = image_paths(&a.images)?
        .iter()
        .map(|p| Ok((file_name(p), load_image(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let curve = pipeline::rd_curve(&images, &codebooks)?;

    let mut buf = Vec::new();
    metrics::write_csv(&mut buf, &curve.all_rows()).map_err(Error::from)?;
    write_bytes(&a.out, &buf)?;
    if let Some(dir) = &a.streams_dir {
        create_dir(dir)?;
        for (name, bytes) in &curve.streams {
            write_bytes(&dir.join(format!("{name}.vqis")), bytes)?;
        }
    }
    if let Some(script) = &a.gnuplot {
        write_bytes(script, gnuplot_script(&a.out).as_bytes())?;
    }
    for (_, p) in &curve.means {
        println!(
            "K={:<5} mean bpp_payload {:.6}  bpp_file {:.6}  PSNR {:.3} dB",
            p.codebook_size, p.bpp_payload, p.bpp_file, p.psnr_db
        );
    }
    Ok(())
}

fn gnuplot_script(csv: &Path) -> String {
    let csv = csv.display().to_string().replace('\'', "");
    format!(
        "set datafile separator ','\n\
         set key bottom right\n\
         set xlabel 'bits per pixel (payload)'\n\
         set ylabel 'PSNR (dB)'\n\
         set grid\n\
         plot '< grep ^mean, {csv}' using 4:6 with linespoints title 'mean over images', \\\n\
         \x20    '{csv}' using 4:6 every ::1 with points pointtype 7 pointsize 0.3 title 'per image'\n"
    )
}

fn inspect(path: &Path) -> Result<()> {
    let bytes = read_bytes(path)?;
    match bytes.get(..4) {
        Some(m) if m == container::MAGIC => {
            let (h, payload) = container::unpack(&bytes).map_err(Error::from)?;
            let (bpp_file, bpp_payload) =
                metrics::bpp(bytes.len(), payload.bytes.len(), h.true_height as usize, h.true_width as usize);
            println!("stream (VQIS v{})", h.version);
            println!("  image        {}x{}", h.true_width, h.true_height);
            println!("  patch        {}", h.patch_size);
            println!("  grid         {}x{} ({} indices)", h.grid_w(), h.grid_h(), h.symbol_count());
            println!("  n_z          {}", h.n_z);
            println!("  codebook     {:016x}", h.codebook_id);
            println!("  K            {}", h.k);
            println!("  payload      {} bytes", h.payload_len);
            println!("  file         {} bytes", bytes.len());
            println!("  bpp_payload  {bpp_payload:.6}");
            println!("  bpp_file     {bpp_file:.6}");
        }
        Some(m) if m == vqic_core::codebook::file::MAGIC => {
            let cb = read_codebook(&bytes).map_err(Error::from)?;
            println!("codebook (VQCB v{})", vqic_core::codebook::file::VERSION);
            println!("  id           {:016x}", cb.id());
            println!("  K            {}", cb.size());
            println!("  n_z          {}", cb.dim());
            match cb.parent_id() {
                Some(p) => println!("  parent       {p:016x}"),
                None => println!("  parent       none"),
            }
            println!("  refine iters {}", cb.refine_iters());
        }
        Some(m) if m == vqic_core::restoration::model_file::MAGIC => {
            let model = read_model(&bytes).map_err(Error::from)?;
            let params = model.params();
            println!("predictor (VQPM v{})", vqic_core::restoration::model_file::VERSION);
            println!("  K            {}", model.alphabet());
            println!("  context      {}", params.context_size);
            println!("  backoff      {:?}", params.levels);
            println!("  tokens       {}", model.trained_tokens());
            println!("  contexts     {}", model.contexts());
            println!("  training NLL {:.4} bits/index", model.training_nll());
        }
        _ => return Err(CliError::UnknownFile(path.to_owned()).into()),
    }
    Ok(())
}

fn synth_images(cfg: &Config, a: &crate::SynthImagesArgs) -> Result<()> {
    if a.width == 0 || a.height == 0 {
        return Err(CliError::BadArgument("image dimensions must be positive".into()).into());
    }
    create_dir(&a.out_dir)?;
    for i in 0..a.count as u64 {
        let img = synth::natural_image(a.width, a.height, cfg.seed.wrapping_add(i));
        write_bytes(&a.out_dir.join(format!("scene{i:03}.ppm")), &vqic_core::write_ppm(&img))?;
    }
    println!("wrote {} images of {}x{} to {}", a.count, a.width, a.height, a.out_dir.display());
    Ok(())
}
