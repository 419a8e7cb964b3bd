mod dataset;
mod explain;
mod model;
mod oracle;
mod study;

use crate::args::{Cli, Command};
use crate::error::CliResult;
use crate::io::Sink;

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let sink = Sink { path: cli.out };
    match cli.command {
        Command::Dataset(c) => dataset::run(c, &sink),
        Command::Model(c) => model::run(c, &sink),
        Command::Explain(c) => explain::run(c, &sink, cli.timing),
        Command::Study(c) => study::run(c, &sink),
        Command::Oracle(c) => oracle::run(c, &sink),
    }
}
