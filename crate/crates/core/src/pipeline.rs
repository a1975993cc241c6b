//! The full front end in one call: parse, ground, instrument with a cost
//! model, reconstruct the temporal actions, and check the explicit result.

use std::fmt;

use crate::checker::{check_signature_in, Env, TypeError};
use crate::cost::{instrument, CostModel, InstrumentError};
use crate::reconstruct::{elaborate_signature_in, ReconstructError};
use crate::runtime::{init_config, run, Program, RunOptions, RunResult, RuntimeError, Scheduler};
use crate::syntax::{ground_with, mangle, parse_program, EvalError, Signature, SyntaxError};
use crate::types::TypeOpsError;

#[derive(Debug)]
pub enum PipelineError {
    Syntax(SyntaxError),
    Eval(EvalError),
    Types(TypeOpsError),
    Instrument(InstrumentError),
    Reconstruct(Vec<ReconstructError>),
    Check(Vec<TypeError>),
    Runtime(RuntimeError),
}

impl PipelineError {
    /// True for errors in the input text itself, as opposed to a negative
    /// typing verdict on a well-formed program.
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Syntax(_) | PipelineError::Eval(_))
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Syntax(e) => write!(f, "syntax error: {e}"),
            PipelineError::Eval(e) => write!(f, "instantiation error: {e}"),
            PipelineError::Types(e) => write!(f, "type definition error: {e}"),
            PipelineError::Instrument(e) => write!(f, "{e}"),
            PipelineError::Reconstruct(es) => {
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
            PipelineError::Runtime(e) => write!(f, "{e}"),
            PipelineError::Check(es) => {
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for PipelineError {}

/// Every intermediate stage of a compiled program.
#[derive(Debug)]
pub struct Compiled {
    pub source: Signature,
    pub ground: Signature,
    pub instrumented: Signature,
    /// The explicit program: reconstructed, or the instrumented program
    /// itself when reconstruction was skipped.
    pub explicit: Signature,
    pub env: Env,
}

#[derive(Clone, Debug)]
pub struct Options<'a> {
    pub cost: CostModel,
    /// Skip reconstruction and check the instrumented program as written.
    pub explicit: bool,
    /// Indexed process families to ground, with their indices.
    pub roots: Vec<(&'a str, Vec<u64>)>,
}

impl Default for Options<'_> {
    fn default() -> Self {
        Options { cost: CostModel::Free, explicit: false, roots: Vec::new() }
    }
}

pub fn compile_signature(source: Signature, opts: &Options) -> Result<Compiled, PipelineError> {
    let ground = ground_with(&source, &opts.roots).map_err(PipelineError::Eval)?;
    let instrumented = instrument(&ground, opts.cost).map_err(PipelineError::Instrument)?;
    let env = Env::new(&instrumented).map_err(PipelineError::Types)?;
    let explicit = if opts.explicit {
        instrumented.clone()
    } else {
        elaborate_signature_in(&env, &instrumented).map_err(PipelineError::Reconstruct)?
    };
    check_signature_in(&env, &explicit).map_err(PipelineError::Check)?;
    Ok(Compiled { source, ground, instrumented, explicit, env })
}

pub fn compile(src: &str, opts: &Options) -> Result<Compiled, PipelineError> {
    let source = parse_program(src).map_err(PipelineError::Syntax)?;
    compile_signature(source, opts)
}

/// Verdict for a single definition.
#[derive(Debug)]
pub struct Verdict {
    pub def: String,
    pub result: Result<(), String>,
}

/// Reconstructs and checks each definition on its own, so that one
/// ill-typed definition does not hide the verdicts of the others.
pub fn verdicts(src: &str, opts: &Options) -> Result<Vec<Verdict>, PipelineError> {
    let source = parse_program(src).map_err(PipelineError::Syntax)?;
    let ground = ground_with(&source, &opts.roots).map_err(PipelineError::Eval)?;
    let instrumented = instrument(&ground, opts.cost).map_err(PipelineError::Instrument)?;
    let env = Env::new(&instrumented).map_err(PipelineError::Types)?;
    let mut out = Vec::new();
    for def in instrumented.defs() {
        let result = if opts.explicit {
            Ok(def.clone())
        } else {
            crate::reconstruct::elaborate_definition(&env, def).map_err(|e| e.to_string())
        };
        let result = result.and_then(|d| {
            let decl = &env.decls[&d.name];
            crate::checker::check_definition(&env, decl, &d.dest, &d.chans, &d.body).map_err(|e| e.to_string())
        });
        out.push(Verdict { def: def.name.clone(), result });
    }
    Ok(out)
}

/// Parses `name` or `name:i,j,k` into a process name and its indices.
pub fn parse_call(s: &str) -> Result<(String, Vec<u64>), String> {
    let (name, idx) = s.split_once(':').unwrap_or((s, ""));
    if name.is_empty() {
        return Err(format!("missing process name in `{s}`"));
    }
    let idx = idx
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<u64>().map_err(|_| format!("bad index `{p}` in `{s}`")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name.to_string(), idx))
}

/// A compiled program together with one run of it.
#[derive(Debug)]
pub struct Execution {
    pub compiled: Compiled,
    pub program: Program,
    /// The channel `main` provides and its type.
    pub interface: Vec<(String, crate::syntax::SessionType)>,
    pub result: RunResult,
}

impl Execution {
    pub fn root(&self) -> &str {
        &self.interface[0].0
    }
}

/// Compiles `src` with `main` at the given indices as the only root, and
/// runs it.
pub fn execute(
    src: &str,
    cost: CostModel,
    main: &str,
    args: &[u64],
    scheduler: Scheduler,
    budget: usize,
    check: bool,
) -> Result<Execution, PipelineError> {
    let compiled = compile(src, &Options { cost, explicit: false, roots: vec![(main, args.to_vec())] })?;
    let program = Program::new(&compiled.env, &compiled.explicit);
    let name = if args.is_empty() && compiled.explicit.def(main).is_some() { main.to_string() } else { mangle(main, args) };
    let (cfg, interface) = init_config(&program, &name).map_err(PipelineError::Runtime)?;
    let opts = RunOptions { scheduler, budget, check: if check { Some(&interface) } else { None } };
    let result = run(&program, cfg, &opts).map_err(PipelineError::Runtime)?;
    Ok(Execution { compiled, program, interface, result })
}
