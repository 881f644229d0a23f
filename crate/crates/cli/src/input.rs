use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use amerdual::fixtures;
use amerdual::market::{ModelFile, NumberJson};
use amerdual::mot::{self, MarginalSpec, MarginalSpecJson};
use amerdual::{AmericanPayoff, Market, Rational};
use serde_json::{json, Value};

use crate::CliError;

/// A market with its optional American payoff, plus the canonical text used
/// for the inputs digest (independent of file formatting).
pub struct Model {
    pub market: Market<Rational>,
    pub payoff: Option<AmericanPayoff<Rational>>,
    pub canonical: Value,
}

impl Model {
    fn new(market: Market<Rational>, payoff: Option<AmericanPayoff<Rational>>) -> Self {
        let text = ModelFile::from_market(&market, payoff.as_ref()).to_json_string();
        let canonical = serde_json::from_str(&text).expect("model files are valid JSON");
        Model { market, payoff, canonical }
    }

    pub fn require_payoff(&self) -> Result<&AmericanPayoff<Rational>, CliError> {
        self.payoff.as_ref().ok_or_else(|| CliError::input("the model has no `american` payoff section"))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn unknown_fixture(name: &str) -> CliError {
    let names: Vec<&str> = fixtures::all().iter().map(|f| f.name).collect();
    CliError::input(format!("unknown fixture `{name}` (available: {})", names.join(", ")))
}

pub fn load_model(model: Option<&Path>, fixture: Option<&str>) -> Result<Model, CliError> {
    match (model, fixture) {
        (Some(path), None) => {
            let file = ModelFile::parse(&read(path)?)?;
            let market = file.market()?;
            let payoff = file.american(&market)?;
            Ok(Model::new(market, payoff))
        }
        (None, Some(name)) => {
            let f = fixtures::by_name(name).ok_or_else(|| unknown_fixture(name))?;
            Ok(Model::new(f.market, Some(f.payoff)))
        }
        (Some(_), Some(_)) => Err(CliError::input("give either --model or --fixture, not both")),
        (None, None) => Err(CliError::input("a model is required: pass --model FILE or --fixture NAME")),
    }
}

/// Marginals, the market built on their support grid, and the payoff on it.
pub struct MotInput {
    pub spec: MarginalSpec<Rational>,
    pub model: Model,
    pub canonical: Value,
}

pub fn load_mot(marginals: Option<&Path>, payoff: Option<&Path>, fixture: Option<&str>) -> Result<MotInput, CliError> {
    if let Some(name) = fixture {
        if marginals.is_some() || payoff.is_some() {
            return Err(CliError::input("give either --fixture or --marginals/--payoff, not both"));
        }
        if name != "mot-example" {
            return Err(CliError::input(format!("fixture `{name}` has no marginals (only `mot-example` does)")));
        }
        let f = fixtures::mot_fixture();
        let spec = fixtures::mot_example_spec();
        let canonical = json!(MarginalSpecJson::from_spec(&spec));
        return Ok(MotInput { spec, model: Model::new(f.market, Some(f.payoff)), canonical });
    }
    let path = marginals.ok_or_else(|| CliError::input("pass --marginals FILE (or --fixture mot-example)"))?;
    let spec = MarginalSpecJson::parse(&read(path)?)?;
    spec.validate()?;
    let grid = mot::support_grid(&spec, spec.horizon());
    let market = mot::build_mot_market(&spec, &grid)?;
    let path = payoff.ok_or_else(|| {
        let ids: Vec<&str> = (0..market.num_paths()).map(|p| market.path_id(p)).collect();
        CliError::input(format!("pass --payoff FILE keyed by exercise date and path id ({})", ids.join(", ")))
    })?;
    let dates: BTreeMap<String, BTreeMap<String, NumberJson>> = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::input(format!("payoff file: {e}")))?;
    let mut file = ModelFile::from_market(&market, None);
    file.american = Some(dates);
    let phi = file.american(&market)?;
    let canonical = json!(MarginalSpecJson::from_spec(&spec));
    Ok(MotInput { spec, model: Model::new(market, phi), canonical })
}
