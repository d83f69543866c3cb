use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use oneshot_deblur::blind::{analyze_spectrum, estimate_image, radial_spectrum, BlurEstimate, ImageEstimate};
use oneshot_deblur::metrics::{quality_report, QualityReport};
use oneshot_deblur::synthetic::{mixed_scene, simulate_image};
use oneshot_deblur::{
    deblur_detailed, design_inverse, feasibility_error, BitDepth, GammaMode, GeneralizedGaussianPsf, Image,
    InverseDesign,
};
use serde::Serialize;

use crate::config::{PipelineConfig, FEASIBILITY_LIMIT};
use crate::error::{invalid, CliError, CliResult};
use crate::imageio::{is_supported_extension, read_image, write_image};

/// Version of the JSON output schema.
pub const SPEC_VERSION: &str = "1.0.0";

#[derive(Debug, Serialize)]
pub struct ChannelEstimate {
    pub alpha: f64,
    pub noise_coeff: f64,
    pub residual: f64,
}

impl From<&BlurEstimate> for ChannelEstimate {
    fn from(e: &BlurEstimate) -> Self {
        Self {
            alpha: e.alpha,
            noise_coeff: e.noise_coeff,
            residual: e.fit_residual,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub model: &'static str,
    pub alpha: f64,
    pub noise_coeff: f64,
    pub residual: f64,
    pub s: usize,
    pub per_channel: Vec<ChannelEstimate>,
}

impl From<&ImageEstimate> for EstimateReport {
    fn from(e: &ImageEstimate) -> Self {
        Self {
            model: e.model.name(),
            alpha: e.alpha,
            noise_coeff: e.noise_coeff,
            residual: e.fit_residual,
            s: e.scale_factor,
            per_channel: e.per_channel.iter().map(ChannelEstimate::from).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DesignReport {
    pub beta: f64,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub order: usize,
    #[serde(rename = "omega_T")]
    pub omega_t: f64,
    pub taps: usize,
    pub feasibility_error: f64,
    pub coefficients: Vec<f64>,
    pub kernel_taps: Vec<f64>,
}

impl DesignReport {
    fn new(design: &InverseDesign, feasibility_error: f64) -> Self {
        Self {
            beta: design.source_psf.shape,
            sigma: design.source_psf.scale,
            order: design.order,
            omega_t: design.fit_band,
            taps: design.taps(),
            feasibility_error,
            coefficients: design.coefficients.clone(),
            kernel_taps: design.deblur_kernel.taps().to_vec(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Versioned<T: Serialize> {
    spec_version: &'static str,
    #[serde(flatten)]
    body: T,
}

/// Writes `body` as pretty JSON, tagged with the schema version, to `path`
/// or to stdout.
pub fn emit_json<T: Serialize>(body: T, path: Option<&Path>) -> CliResult<()> {
    let doc = Versioned {
        spec_version: SPEC_VERSION,
        body,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Failed(e.to_string()))?;
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| CliError::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Designs the inverse of `psf` and refuses it when the in-band inverse
/// error is above [`FEASIBILITY_LIMIT`].
fn checked_design(psf: &GeneralizedGaussianPsf, config: &PipelineConfig) -> CliResult<(InverseDesign, f64)> {
    let design = design_inverse(psf, &config.design_config())?;
    let error = feasibility_error(psf, &design, design.fit_band)?;
    if error > FEASIBILITY_LIMIT {
        return Err(CliError::Infeasible {
            error,
            band: design.fit_band,
            limit: FEASIBILITY_LIMIT,
        });
    }
    Ok((design, error))
}

#[derive(Debug, Serialize)]
pub struct DeblurReport {
    pub input: PathBuf,
    pub output: PathBuf,
    pub estimate: EstimateReport,
    pub design: DesignReport,
    pub gamma_mode: GammaMode,
    /// Strength used for each channel.
    pub gamma: Vec<f64>,
    /// Scale of the Gaussian denoise kernel, when enabled.
    pub denoise_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<QualityReport>>,
}

/// Blind estimate → inverse design → per-channel deblur → write.
pub fn deblur_file(
    input: &Path,
    output: &Path,
    reference: Option<&Path>,
    config: &PipelineConfig,
) -> CliResult<DeblurReport> {
    let image = read_image(input)?;
    let estimate = estimate_image(&image, config.model, config.scale_factor, config.bins)?;
    let psf = GeneralizedGaussianPsf::new(config.model.shape(), estimate.alpha)?;
    let (design, feasibility) = checked_design(&psf, config)?;
    let params = config.tuning()?;
    let denoise = config
        .denoise_ratio
        .map(|r| GeneralizedGaussianPsf::gaussian(r * estimate.alpha))
        .transpose()?;

    let mut gamma = Vec::with_capacity(image.channels().len());
    let mut channels = Vec::with_capacity(image.channels().len());
    for plane in image.channels() {
        let out = deblur_detailed(plane, &design, &params, denoise.as_ref())?;
        gamma.push(out.gamma);
        channels.push(out.image);
    }
    let restored = Image::new(channels, image.bit_depth())?.quantized();
    write_image(output, &restored)?;

    let metrics = match reference {
        Some(path) => Some(compare(&read_image(path)?, &restored, config.bins)?),
        None => None,
    };
    Ok(DeblurReport {
        input: input.to_path_buf(),
        output: output.to_path_buf(),
        estimate: EstimateReport::from(&estimate),
        design: DesignReport::new(&design, feasibility),
        gamma_mode: params.mode(),
        gamma,
        denoise_scale: denoise.map(|p| p.scale),
        metrics,
    })
}

#[derive(Debug, Serialize)]
struct BatchFailure {
    input: PathBuf,
    error: String,
    exit_code: i32,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum BatchEntry {
    Done(Box<DeblurReport>),
    Failed(BatchFailure),
}

#[derive(Debug, Serialize)]
struct BatchReport {
    results: Vec<BatchEntry>,
}

pub fn cmd_deblur(
    input: &Path,
    output: &Path,
    reference: Option<&Path>,
    report: Option<&Path>,
    config: &PipelineConfig,
) -> CliResult<()> {
    if !input.is_dir() {
        let r = deblur_file(input, output, reference, config)?;
        return emit_json(r, report);
    }
    if reference.is_some() {
        return invalid("--reference is only supported for a single input file");
    }
    fs::create_dir_all(output).map_err(|e| CliError::io(output, e))?;
    let mut inputs: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| CliError::io(input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_extension(p))
        .collect();
    inputs.sort();

    // Every file is attempted; the first failure decides the exit code.
    let mut first_failure = None;
    let mut results = Vec::with_capacity(inputs.len());
    for path in inputs {
        let target = output.join(path.file_name().expect("directory entries have names"));
        match deblur_file(&path, &target, None, config) {
            Ok(r) => results.push(BatchEntry::Done(Box::new(r))),
            Err(err) => {
                eprintln!("{}: {err}", path.display());
                results.push(BatchEntry::Failed(BatchFailure {
                    input: path,
                    error: err.to_string(),
                    exit_code: err.exit_code(),
                }));
                first_failure.get_or_insert(err);
            }
        }
    }
    emit_json(BatchReport { results }, report)?;
    first_failure.map_or(Ok(()), Err)
}

pub fn cmd_estimate(input: &Path, report: Option<&Path>, config: &PipelineConfig) -> CliResult<()> {
    let image = read_image(input)?;
    let estimate = estimate_image(&image, config.model, config.scale_factor, config.bins)?;
    emit_json(EstimateReport::from(&estimate), report)
}

pub fn cmd_design(
    beta: f64,
    sigma: f64,
    csv: Option<&Path>,
    report: Option<&Path>,
    config: &PipelineConfig,
) -> CliResult<()> {
    let psf = GeneralizedGaussianPsf::new(beta, sigma)?;
    let (design, feasibility) = checked_design(&psf, config)?;
    if let Some(path) = csv {
        let taps = design.deblur_kernel.taps();
        let c = (taps.len() / 2) as i64;
        let mut text = String::from("index,tap\n");
        for (i, t) in taps.iter().enumerate() {
            writeln!(text, "{},{t:e}", i as i64 - c).expect("writing to a String");
        }
        write_text(path, &text)?;
    }
    emit_json(DesignReport::new(&design, feasibility), report)
}

pub fn cmd_simulate(
    input: &Path,
    output: &Path,
    beta: f64,
    sigma: f64,
    noise_sigma: f64,
    seed: u64,
) -> CliResult<()> {
    if !(sigma > 0.0) {
        return invalid(format!("blur scale must be positive, got {sigma}"));
    }
    let psf = GeneralizedGaussianPsf::new(beta, sigma)?;
    let image = read_image(input)?;
    let blurred = simulate_image(&image, &psf, noise_sigma, seed)?.quantized();
    write_image(output, &blurred)
}

fn select_channel(image: &Image, channel: usize) -> CliResult<&oneshot_deblur::ImagePlane> {
    image.channels().get(channel).map_or_else(
        || invalid(format!("channel {channel} out of range ({} channels)", image.channels().len())),
        Ok,
    )
}

pub fn cmd_spectrum(
    input: &Path,
    output: &Path,
    ratio_output: Option<&Path>,
    channel: usize,
    config: &PipelineConfig,
) -> CliResult<()> {
    let image = read_image(input)?;
    let plane = select_channel(&image, channel)?;
    let spectrum = radial_spectrum(plane, config.bins)?;
    let mut text = String::from("r,value\n");
    for (r, v) in spectrum.centers().iter().zip(&spectrum.values) {
        writeln!(text, "{r:.9},{v:e}").expect("writing to a String");
    }
    write_text(output, &text)?;
    if let Some(path) = ratio_output {
        let analysis = analyze_spectrum(plane, config.scale_factor, config.bins)?;
        let mut text = String::from("r,ratio\n");
        for (r, v) in analysis.ratio.radii.iter().zip(&analysis.ratio.ratios) {
            writeln!(text, "{r:.9},{v:e}").expect("writing to a String");
        }
        write_text(path, &text)?;
    }
    Ok(())
}

fn compare(reference: &Image, test: &Image, bins: usize) -> CliResult<Vec<QualityReport>> {
    if reference.channels().len() != test.channels().len() {
        return invalid(format!(
            "channel count differs: {} vs {}",
            reference.channels().len(),
            test.channels().len()
        ));
    }
    reference
        .channels()
        .iter()
        .zip(test.channels())
        .map(|(r, t)| Ok(quality_report(r, t, bins)?))
        .collect()
}

#[derive(Debug, Serialize)]
struct MetricsReport {
    reference: PathBuf,
    test: PathBuf,
    per_channel: Vec<QualityReport>,
}

pub fn cmd_metrics(reference: &Path, test: &Path, report: Option<&Path>, bins: usize) -> CliResult<()> {
    let per_channel = compare(&read_image(reference)?, &read_image(test)?, bins)?;
    emit_json(
        MetricsReport {
            reference: reference.to_path_buf(),
            test: test.to_path_buf(),
            per_channel,
        },
        report,
    )
}

/// Writes a synthetic test scene; RGB scenes use consecutive seeds per channel.
pub fn cmd_scene(
    output: &Path,
    width: usize,
    height: usize,
    rgb: bool,
    sixteen_bit: bool,
    seed: u64,
) -> CliResult<()> {
    let count = if rgb { 3 } else { 1 };
    let channels = (0..count)
        .map(|c| mixed_scene(width, height, seed + c))
        .collect::<Result<Vec<_>, _>>()?;
    let depth = if sixteen_bit { BitDepth::Sixteen } else { BitDepth::Eight };
    write_image(output, &Image::new(channels, depth)?.quantized())
}
