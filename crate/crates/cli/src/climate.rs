use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use densum::pipeline::{
    climate_prepare, join_climate, normalize_monthly_series, read_climate_csv, write_climate_csv, write_monthly_csv,
    ClimateRow, MonthlyValue,
};

use crate::analyze::UnitArg;
use crate::NetworkError;

const TEMP_URL: &str =
    "https://www.ncei.noaa.gov/access/monitoring/climate-at-a-glance/global/time-series/globe/land_ocean/1/0/1979-2022/data.csv";
const CO2_URL: &str = "https://gml.noaa.gov/webdata/ccgg/trends/co2/co2_mm_gl.csv";

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Combined date,temp,co2,index file.
    #[arg(long, conflicts_with_all = ["temp", "co2", "index"], required_unless_present_all = ["temp", "co2", "index"])]
    input: Option<PathBuf>,
    /// Monthly temperature series (as written by fetch-climate).
    #[arg(long)]
    temp: Option<PathBuf>,
    /// Monthly CO2 series (as written by fetch-climate).
    #[arg(long)]
    co2: Option<PathBuf>,
    /// Monthly index series with date,index columns.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = UnitArg::Monthly)]
    unit: UnitArg,
    /// First month kept, YYYY-MM.
    #[arg(long)]
    from: Option<String>,
    /// Last month kept, YYYY-MM.
    #[arg(long)]
    to: Option<String>,
    /// Also write the joined monthly rows here.
    #[arg(long)]
    rows_out: Option<PathBuf>,
    /// Model-frame CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_month(s: &str) -> Result<(i32, u32)> {
    let bad = || anyhow::anyhow!("'{s}' is not YYYY-MM");
    let (y, m) = s.split_once('-').ok_or_else(bad)?;
    let (y, m): (i32, u32) = (y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?);
    if !(1..=12).contains(&m) {
        return Err(bad());
    }
    Ok((y, m))
}

fn read_series(path: &Path, name: &str) -> Result<Vec<MonthlyValue>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    normalize_monthly_series(&text, name).with_context(|| format!("parsing {}", path.display()))
}

fn load_rows(a: &PrepareArgs) -> Result<Vec<ClimateRow>> {
    if let Some(p) = &a.input {
        let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        return read_climate_csv(f).with_context(|| format!("parsing {}", p.display()));
    }
    let (Some(t), Some(c), Some(i)) = (&a.temp, &a.co2, &a.index) else {
        bail!("pass --input, or all of --temp, --co2 and --index");
    };
    Ok(join_climate(&read_series(t, "temp")?, &read_series(c, "co2")?, &read_series(i, "index")?)?)
}

pub fn prepare(a: PrepareArgs) -> Result<()> {
    let mut rows = load_rows(&a)?;
    let from = a.from.as_deref().map(parse_month).transpose()?;
    let to = a.to.as_deref().map(parse_month).transpose()?;
    rows.retain(|r| from.is_none_or(|f| (r.year, r.month) >= f) && to.is_none_or(|t| (r.year, r.month) <= t));
    if let Some(p) = &a.rows_out {
        let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_climate_csv(std::io::BufWriter::new(f), &rows)?;
    }
    let frame = climate_prepare(&rows, a.unit.into())?;
    eprintln!("{}: n = {}", frame.description(), frame.n());
    match &a.out {
        Some(p) => {
            let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            frame.write_csv(std::io::BufWriter::new(f))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            frame.write_csv(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long, default_value = TEMP_URL)]
    temp_url: String,
    #[arg(long, default_value = CO2_URL)]
    co2_url: String,
    /// Directory receiving temp.csv and co2.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
}

fn download(agent: &ureq::Agent, url: &str) -> Result<String> {
    log::info!("fetching {url}");
    let mut resp = agent.get(url).call().map_err(|e| NetworkError(format!("{url}: {e}")))?;
    resp.body_mut()
        .read_to_string()
        .map_err(|e| NetworkError(format!("{url}: {e}")).into())
}

pub fn fetch(a: FetchArgs) -> Result<()> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(a.timeout)))
        .build()
        .into();
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (url, name, column, file) in [
        (&a.temp_url, "temp", "anomaly", "temp.csv"),
        (&a.co2_url, "co2", "average", "co2.csv"),
    ] {
        let text = download(&agent, url)?;
        let series = normalize_monthly_series(&text, column).with_context(|| format!("normalizing {url}"))?;
        let path = a.out_dir.join(file);
        let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_monthly_csv(std::io::BufWriter::new(f), name, &series)?;
        let ((y0, m0), _) = series[0];
        let ((y1, m1), _) = series[series.len() - 1];
        eprintln!("{}: {} months, {y0}-{m0:02} to {y1}-{m1:02}", path.display(), series.len());
    }
    Ok(())
}
