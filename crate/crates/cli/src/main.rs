//! `apronid`: measure and identify aircraft from overhead instance masks.
//!
//! Exit codes are a stable contract: 0 success, 2 usage error, 3 data
//! error (unreadable or invalid input files), 4 internal error (failures
//! writing output). JSON output carries a schema `version` field and is
//! byte-identical for identical inputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use apronid_core::dataio::{load_mask, DatasetManifest};
use apronid_core::evaluation::{evaluate_dataset, EvalReport};
use apronid_core::geometry::{convex_hull_monotone, mask_diameter_px, PixelMask};
use apronid_core::identification::TypeDatabase;
use apronid_core::photogrammetry::{
    compute_gsd, length_m, surface_area_m2, CameraModel, GroundSampleDistance,
};
use apronid_core::synthkit::{synth_dataset, SynthError};

const JSON_VERSION: &str = "1";
/// Fallback path for the type database CSV when --types is absent.
const TYPES_ENV: &str = "APRONID_TYPES";

#[derive(Parser)]
#[command(
    name = "apronid",
    version,
    about = "Aircraft measurement and type identification from instance masks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
    Csv,
}

/// Ground sample distance, given directly or through camera parameters.
/// A direct value wins when both are present.
#[derive(Args)]
struct GsdArgs {
    /// Ground sample distance in cm per pixel
    #[arg(long)]
    gsd: Option<f64>,
    /// Camera sensor width in millimeters
    #[arg(long)]
    sensor_width_mm: Option<f64>,
    /// Flight altitude in meters
    #[arg(long)]
    altitude_m: Option<f64>,
    /// Lens focal length in millimeters
    #[arg(long)]
    focal_length_mm: Option<f64>,
    /// Frame width in pixels
    #[arg(long)]
    image_width_px: Option<u32>,
}

impl GsdArgs {
    fn resolve(&self) -> Result<GroundSampleDistance, CliError> {
        if let Some(v) = self.gsd {
            return GroundSampleDistance::from_cm_per_px(v)
                .map_err(|e| CliError::usage(e.to_string()));
        }
        match (
            self.sensor_width_mm,
            self.altitude_m,
            self.focal_length_mm,
            self.image_width_px,
        ) {
            (Some(s), Some(a), Some(f), Some(w)) => {
                let camera =
                    CameraModel::new(s, a, f, w).map_err(|e| CliError::usage(e.to_string()))?;
                compute_gsd(&camera).map_err(|e| CliError::usage(e.to_string()))
            }
            _ => Err(CliError::usage(
                "provide --gsd or all of --sensor-width-mm, --altitude-m, \
                 --focal-length-mm, --image-width-px",
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ground sample distance from camera parameters
    Gsd {
        /// Camera sensor width in millimeters
        #[arg(long)]
        sensor_width_mm: f64,
        /// Flight altitude in meters
        #[arg(long)]
        altitude_m: f64,
        /// Lens focal length in millimeters
        #[arg(long)]
        focal_length_mm: f64,
        /// Frame width in pixels
        #[arg(long)]
        image_width_px: u32,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Measure a mask and identify the aircraft type
    Identify {
        /// Mask file (.png or .rle)
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        gsd: GsdArgs,
        /// Type database CSV (falls back to APRONID_TYPES, then built-in)
        #[arg(long)]
        types: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Evaluate a dataset manifest and write the report
    Evaluate {
        /// Dataset manifest JSON
        #[arg(long)]
        manifest: PathBuf,
        /// Type database CSV (falls back to APRONID_TYPES, then built-in)
        #[arg(long)]
        types: Option<PathBuf>,
        /// Directory for report.json and confusion.csv
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate a synthetic labeled dataset
    Synth {
        /// Output directory for masks and manifest.json
        #[arg(long)]
        out: PathBuf,
        /// Instances per aircraft type
        #[arg(long, default_value_t = 3)]
        per_type: usize,
        /// Relative length noise in [0, 0.5)
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Ground sample distance in cm per pixel
        #[arg(long, default_value_t = 3.13)]
        gsd: f64,
        /// Generator seed; fixed seeds reproduce datasets byte for byte
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Type database CSV (falls back to APRONID_TYPES, then built-in)
        #[arg(long)]
        types: Option<PathBuf>,
    },
    /// Print a mask's convex hull vertices and diameter
    Hull {
        /// Mask file (.png or .rle)
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

struct CliError {
    exit: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            exit: 2,
            message: message.into(),
        }
    }
    fn data(message: impl Into<String>) -> Self {
        Self {
            exit: 3,
            message: message.into(),
        }
    }
    fn internal(message: impl Into<String>) -> Self {
        Self {
            exit: 4,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gsd {
            sensor_width_mm,
            altitude_m,
            focal_length_mm,
            image_width_px,
            format,
        } => cmd_gsd(
            sensor_width_mm,
            altitude_m,
            focal_length_mm,
            image_width_px,
            format,
        ),
        Command::Identify {
            mask,
            gsd,
            types,
            format,
        } => cmd_identify(&mask, &gsd, types.as_deref(), format),
        Command::Evaluate {
            manifest,
            types,
            out,
        } => cmd_evaluate(&manifest, types.as_deref(), &out),
        Command::Synth {
            out,
            per_type,
            noise,
            gsd,
            seed,
            types,
        } => cmd_synth(&out, per_type, noise, gsd, seed, types.as_deref()),
        Command::Hull { mask, format } => cmd_hull(&mask, format),
    }
}

fn resolve_types(flag: Option<&Path>) -> Result<TypeDatabase, CliError> {
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(TYPES_ENV).map(PathBuf::from));
    match path {
        Some(p) => TypeDatabase::from_csv_path(&p).map_err(|e| CliError::data(e.to_string())),
        None => Ok(TypeDatabase::builtin()),
    }
}

fn load_mask_checked(path: &Path) -> Result<PixelMask, CliError> {
    let mask = load_mask(path).map_err(|e| CliError::data(e.to_string()))?;
    if mask.is_empty() {
        return Err(CliError::data(format!(
            "mask {} has no foreground pixels",
            path.display()
        )));
    }
    Ok(mask)
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("output serializes")
    );
}

// ---------------------------------------------------------------------------
// gsd

#[derive(Serialize)]
struct GsdOutput {
    version: &'static str,
    gsd_cm_per_px: f64,
}

fn cmd_gsd(
    sensor_width_mm: f64,
    altitude_m: f64,
    focal_length_mm: f64,
    image_width_px: u32,
    format: OutputFormat,
) -> Result<(), CliError> {
    let camera = CameraModel::new(sensor_width_mm, altitude_m, focal_length_mm, image_width_px)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let gsd = compute_gsd(&camera).map_err(|e| CliError::usage(e.to_string()))?;
    match format {
        OutputFormat::Text => println!("{:.2} cm/px", gsd.cm_per_px()),
        OutputFormat::Json => print_json(&GsdOutput {
            version: JSON_VERSION,
            gsd_cm_per_px: gsd.cm_per_px(),
        }),
        OutputFormat::Csv => {
            println!("gsd_cm_per_px");
            println!("{}", gsd.cm_per_px());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// identify

#[derive(Serialize)]
struct IdentifyOutput {
    version: &'static str,
    length_m: f64,
    area_m2: f64,
    type_code: String,
}

fn cmd_identify(
    mask_path: &Path,
    gsd_args: &GsdArgs,
    types: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let gsd = gsd_args.resolve()?;
    let db = resolve_types(types)?;
    let mask = load_mask_checked(mask_path)?;
    let diameter = mask_diameter_px(&mask).map_err(|e| CliError::data(e.to_string()))?;
    let length = length_m(diameter, gsd);
    let area = surface_area_m2(mask.pixel_count(), gsd);
    let code = db.classify_by_length(length).code.clone();
    match format {
        OutputFormat::Text => {
            println!("length_m: {length:.2}");
            println!("area_m2: {area:.2}");
            println!("type: {code}");
        }
        OutputFormat::Json => print_json(&IdentifyOutput {
            version: JSON_VERSION,
            length_m: length,
            area_m2: area,
            type_code: code,
        }),
        OutputFormat::Csv => {
            println!("length_m,area_m2,type_code");
            println!("{length},{area},{code}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

fn format_metric(v: f64) -> String {
    format!("{v:.3}")
}

fn print_report_summary(report: &EvalReport) {
    let c = &report.coco;
    println!("detection metrics (IoU 0.50:0.95)");
    let rows = [
        ("ap", c.ap, "ar_max1", c.ar_max1),
        ("ap50", c.ap50, "ar_max10", c.ar_max10),
        ("ap75", c.ap75, "ar_max100", c.ar_max100),
        ("ap_small", c.ap_small, "ar_small", c.ar_small),
        ("ap_medium", c.ap_medium, "ar_medium", c.ar_medium),
        ("ap_large", c.ap_large, "ar_large", c.ar_large),
    ];
    for (la, va, lb, vb) in rows {
        println!(
            "  {:<10} {:>7}   {:<10} {:>7}",
            la,
            format_metric(va),
            lb,
            format_metric(vb)
        );
    }
    println!();
    println!(
        "{:<10} {:>9} {:>9} {:>5} {:>4}",
        "type", "actual_m", "mean_m", "acc%", "n"
    );
    for t in &report.per_type {
        let mean = t
            .mean_detected_length_m
            .map_or("-".to_string(), |v| format!("{v:.2}"));
        let acc = t.accuracy_pct.map_or("-".to_string(), |v| v.to_string());
        println!(
            "{:<10} {:>9.2} {:>9} {:>5} {:>4}",
            t.code, t.actual_length_m, mean, acc, t.samples
        );
    }
    match report.average_accuracy_pct {
        Some(avg) => println!("average accuracy: {}", avg.round() as i64),
        None => println!("average accuracy: -"),
    }
}

fn cmd_evaluate(manifest_path: &Path, types: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let manifest =
        DatasetManifest::load(manifest_path).map_err(|e| CliError::data(e.to_string()))?;
    let db = resolve_types(types)?;
    let report = evaluate_dataset(&manifest, &db).map_err(|e| CliError::data(e.to_string()))?;

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", out.display())))?;
    let report_path = out.join("report.json");
    let confusion_path = out.join("confusion.csv");
    std::fs::write(&report_path, report.to_json())
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", report_path.display())))?;
    std::fs::write(&confusion_path, report.confusion.to_csv()).map_err(|e| {
        CliError::internal(format!("cannot write {}: {e}", confusion_path.display()))
    })?;

    print_report_summary(&report);
    println!();
    println!("report: {}", report_path.display());
    println!("confusion matrix: {}", confusion_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// synth

fn cmd_synth(
    out: &Path,
    per_type: usize,
    noise: f64,
    gsd_cm: f64,
    seed: u64,
    types: Option<&Path>,
) -> Result<(), CliError> {
    let gsd =
        GroundSampleDistance::from_cm_per_px(gsd_cm).map_err(|e| CliError::usage(e.to_string()))?;
    let db = resolve_types(types)?;
    let manifest = synth_dataset(&db, per_type, noise, gsd, seed, out).map_err(|e| match e {
        SynthError::InvalidSpec(_) => CliError::usage(e.to_string()),
        _ => CliError::data(e.to_string()),
    })?;
    println!(
        "wrote {} images to {}",
        manifest.images().len(),
        out.join("manifest.json").display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// hull

#[derive(Serialize)]
struct HullOutput {
    version: &'static str,
    vertices: Vec<[i64; 2]>,
    diameter_px: f64,
}

fn cmd_hull(mask_path: &Path, format: OutputFormat) -> Result<(), CliError> {
    let mask = load_mask_checked(mask_path)?;
    let hull =
        convex_hull_monotone(mask.foreground()).map_err(|e| CliError::data(e.to_string()))?;
    let diameter = mask_diameter_px(&mask).map_err(|e| CliError::data(e.to_string()))?;
    let vertices: Vec<[i64; 2]> = hull.vertices().iter().map(|p| [p.x, p.y]).collect();
    match format {
        OutputFormat::Text => {
            println!("vertices: {}", vertices.len());
            for [x, y] in &vertices {
                println!("{x},{y}");
            }
            println!("diameter_px: {diameter:.2}");
        }
        OutputFormat::Json => print_json(&HullOutput {
            version: JSON_VERSION,
            vertices,
            diameter_px: diameter,
        }),
        OutputFormat::Csv => {
            println!("x,y");
            for [x, y] in &vertices {
                println!("{x},{y}");
            }
        }
    }
    Ok(())
}
