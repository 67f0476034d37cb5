//! The `rtree` command line.
//!
//! Exit status is `0` for success and true verdicts, `1` for false verdicts
//! and failed validations (details go to standard error as `key=value`
//! lines), and `2` for usage, input and parse errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::amalgam::amalgamate;
use crate::format::{
    parse_descriptor, parse_matrix, parse_shared_map, parse_tree, parse_tree_graph, write_matrix, write_tree, TreeFile,
};
use crate::formula::{check_rt_axioms, eval_qf, eval_quantified, parse_formula_declared, Valuation};
use crate::generators::{
    au_sample_ball, build_primitive, degree_family_tree, rb_extend, GeneratorConfig, Primitive,
};
use crate::independence::is_star_independent;
use crate::rat::Rat;
use crate::realize::{realize_tree, tree_to_matrix_labeled};
use crate::tree::{validate, PointRef, TreeSkeleton};
use crate::types::{
    empty_one_type, empty_type, is_principal, one_type_distance, realize_type, type_distance_search, type_of,
    types_equal, NTypeDescriptor,
};

fn rat_arg(s: &str) -> Result<Rat, String> {
    s.parse().map_err(|_| format!("expected an exact rational `a` or `a/b`, got `{s}`"))
}

/// Comma-separated rationals.
#[derive(Clone, Debug)]
struct RatList(Vec<Rat>);

fn rat_list(s: &str) -> Result<RatList, String> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| rat_arg(t.trim())).collect::<Result<_, _>>().map(RatList)
}

/// Comma-separated integers.
#[derive(Clone, Debug)]
struct Degrees(Vec<usize>);

fn degree_list(s: &str) -> Result<Degrees, String> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("expected a comma-separated list of integers, got `{s}`")))
        .collect::<Result<_, _>>()
        .map(Degrees)
}

#[derive(Parser, Debug)]
#[command(name = "rtree", version, about = "Exact computations on pointed R-trees of bounded radius")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a tree file and evaluate the three axioms.
    Check {
        #[arg(long)]
        tree: PathBuf,
        /// Radius bound; defaults to the file's `radius` line.
        #[arg(long, value_parser = rat_arg)]
        radius: Option<Rat>,
        #[arg(long, value_parser = rat_arg)]
        mesh: Option<Rat>,
    },
    /// Evaluate a formula on a tree.
    Eval {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        formula: String,
        /// Assignment `name=point`; repeatable.
        #[arg(long = "let", value_name = "NAME=POINT")]
        lets: Vec<String>,
        #[arg(long, value_parser = rat_arg)]
        mesh: Option<Rat>,
    },
    /// Realize a distance matrix as a tree.
    Realize {
        #[arg(long)]
        matrix: PathBuf,
        /// Label of the basepoint; defaults to the first label.
        #[arg(long)]
        basepoint: Option<String>,
    },
    /// Print the distance matrix of points of a tree.
    Matrix {
        #[arg(long)]
        tree: PathBuf,
        /// Comma-separated points; defaults to the declared points, or all
        /// nodes when none are declared.
        #[arg(long)]
        points: Option<String>,
    },
    /// Amalgamate two trees over a shared subtree.
    Amalgamate {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        shared: PathBuf,
        #[arg(long, value_parser = rat_arg)]
        radius: Rat,
    },
    /// Type queries.
    #[command(subcommand)]
    Type(TypeCommand),
    /// Decide `A ⫫*_C B`.
    Indep {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long = "A", default_value = "")]
        a: String,
        #[arg(long = "B", default_value = "")]
        b: String,
        #[arg(long = "C", default_value = "")]
        c: String,
    },
    /// Generate a tree.
    Generate(GenerateArgs),
}

#[derive(Subcommand, Debug)]
enum TypeCommand {
    /// Descriptor of a tuple over parameters.
    Of {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long = "A", default_value = "")]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Compare two descriptors over the same context.
    Eq {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Distance between types: `--ctx empty --s S --t T` for 1-types over
    /// the empty set, or two descriptor files.
    Dist {
        #[arg(long)]
        ctx: Option<String>,
        #[arg(long, value_parser = rat_arg)]
        s: Option<Rat>,
        #[arg(long, value_parser = rat_arg)]
        t: Option<Rat>,
        #[arg(long)]
        left: Option<PathBuf>,
        #[arg(long)]
        right: Option<PathBuf>,
        #[arg(long, value_parser = rat_arg)]
        radius: Option<Rat>,
        #[arg(long, value_parser = rat_arg)]
        mesh: Option<Rat>,
    },
    /// Realize a descriptor in an extension of its context tree.
    Realize {
        #[arg(long)]
        desc: PathBuf,
    },
    /// Principality over the empty set: a descriptor file, or heights `--s`
    /// with the upper triangle of distances `--rho`.
    Principal {
        #[arg(long)]
        desc: Option<PathBuf>,
        #[arg(long, value_parser = rat_list)]
        s: Option<RatList>,
        #[arg(long, value_parser = rat_list)]
        rho: Option<RatList>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Rb,
    Degrees,
    Universal,
    Primitive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Shape {
    Segment,
    Tripod,
    Star,
    Caterpillar,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    depth: u32,
    #[arg(long, value_parser = rat_arg)]
    radius: Rat,
    /// Degree set for `degrees`.
    #[arg(long, value_parser = degree_list)]
    degrees: Option<Degrees>,
    /// Net spacing of the first round for `degrees`; defaults to radius/2.
    #[arg(long, value_parser = rat_arg)]
    mesh: Option<Rat>,
    #[arg(long, default_value_t = 3)]
    mu: usize,
    #[arg(long, default_value_t = 4)]
    count: usize,
    /// Starting tree for `rb`; defaults to the single point.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, value_enum)]
    shape: Option<Shape>,
    /// Lengths for primitives, comma separated.
    #[arg(long, value_parser = rat_list)]
    lengths: Option<RatList>,
    /// Leaf count for stars, spine length for caterpillars.
    #[arg(long, default_value_t = 3)]
    k: usize,
}

/// How a command ended.
enum Outcome {
    Ok,
    /// False verdict or failed validation.
    False,
}

/// Usage or input error.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

type Res = Result<Outcome, Usage>;

/// Run with explicit argument list and output streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::False) => 1,
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn read(path: &Path) -> Result<String, Usage> {
    std::fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_tree(path: &Path) -> Result<TreeFile, Usage> {
    parse_tree(&read(path)?).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn load_descriptor(path: &Path) -> Result<NTypeDescriptor, Usage> {
    let d = parse_descriptor(&read(path)?).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let ctx_path = path.parent().unwrap_or(Path::new(".")).join(&d.context);
    let ctx = load_tree(&ctx_path)?;
    d.resolve(&ctx).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn default_mesh(flag: Option<Rat>, radius: &Rat) -> Result<Rat, Usage> {
    if let Some(m) = flag {
        return Ok(m);
    }
    match std::env::var("RTREE_MESH") {
        Ok(v) => rat_arg(&v).map_err(|e| Usage(format!("RTREE_MESH: {e}"))),
        Err(_) => Ok(if radius.is_positive() { radius.over(16) } else { Rat::new(1, 16) }),
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Res {
    match cmd {
        Command::Check { tree, radius, mesh } => check(&tree, radius, mesh, out, err),
        Command::Eval { tree, formula, lets, mesh } => eval(&tree, &formula, &lets, mesh, out),
        Command::Realize { matrix, basepoint } => {
            let m = parse_matrix(&read(&matrix)?)?;
            let base = basepoint.or_else(|| m.labels().first().cloned()).ok_or(Usage("empty matrix".into()))?;
            match realize_tree(&m, &base) {
                Ok(t) => {
                    let points: Vec<(String, PointRef)> = m
                        .labels()
                        .iter()
                        .filter_map(|l| crate::realize::labeled_point(&t, l).map(|p| (l.clone(), p)))
                        .collect();
                    write!(out, "{}", write_tree(&t, &t.radius(), &points))?;
                    Ok(Outcome::Ok)
                }
                Err(crate::realize::RealizeError::FourPointViolation(w)) => {
                    let l = m.labels();
                    let [i, j, k, h] = w.indices;
                    writeln!(
                        err,
                        "error=four-point quadruple=({},{},{},{}) lhs={} rhs={}",
                        l[i], l[j], l[k], l[h], w.lhs, w.rhs
                    )?;
                    Ok(Outcome::False)
                }
                Err(e) => Err(Usage(e.to_string())),
            }
        }
        Command::Matrix { tree, points } => {
            let f = load_tree(&tree)?;
            let (labels, pts): (Vec<String>, Vec<PointRef>) = match points {
                Some(list) => {
                    let pts = f.point_list(&list)?;
                    (pts.iter().map(|p| f.tree.describe(p)).collect(), pts)
                }
                None if !f.points.is_empty() => f.points.iter().cloned().unzip(),
                None => f.tree.nodes().map(|v| (f.tree.id(v).to_string(), PointRef::Vertex(v))).unzip(),
            };
            write!(out, "{}", write_matrix(&tree_to_matrix_labeled(&f.tree, &pts, labels)))?;
            Ok(Outcome::Ok)
        }
        Command::Amalgamate { left, right, shared, radius } => {
            let (l, r) = (load_tree(&left)?, load_tree(&right)?);
            let map = parse_shared_map(&read(&shared)?, &l, &r)?;
            match amalgamate(&l.tree, &r.tree, &map, &radius) {
                Ok((n, _, _)) => {
                    write!(out, "{}", write_tree(&n, &radius, &[]))?;
                    Ok(Outcome::Ok)
                }
                Err(e @ crate::amalgam::AmalgamError::Malformed(_)) => Err(Usage(e.to_string())),
                Err(e) => {
                    writeln!(err, "error=amalgamation detail=\"{e}\"")?;
                    Ok(Outcome::False)
                }
            }
        }
        Command::Type(t) => type_command(t, out, err),
        Command::Indep { tree, a, b, c } => {
            let f = load_tree(&tree)?;
            let (a, b, c) = (f.point_list(&a)?, f.point_list(&b)?, f.point_list(&c)?);
            match is_star_independent(&f.tree, &a, &b, &c) {
                Ok(()) => {
                    writeln!(out, "independent")?;
                    Ok(Outcome::Ok)
                }
                Err(w) => {
                    writeln!(out, "dependent")?;
                    writeln!(err, "{}", w.display(&f.tree))?;
                    Ok(Outcome::False)
                }
            }
        }
        Command::Generate(g) => generate(g, out),
    }
}

fn check(path: &Path, radius: Option<Rat>, mesh: Option<Rat>, out: &mut dyn Write, err: &mut dyn Write) -> Res {
    let text = read(path)?;
    let (graph, file_radius, _) = parse_tree_graph(&text)?;
    let r = radius.or(file_radius).ok_or(Usage("no radius: pass --radius or add a `radius` line".into()))?;
    let report = validate(&graph, &r);
    if !report.accepted() {
        for v in &report.violations {
            writeln!(err, "{v}")?;
        }
        if let Some((node, m)) = &report.max_radius {
            writeln!(err, "max_radius={m} node={node} bound={r}")?;
        }
        return Ok(Outcome::False);
    }
    let tree = graph.build()?;
    let rep = check_rt_axioms(&tree, &r, &default_mesh(mesh, &r)?);
    writeln!(out, "{rep}")?;
    Ok(if rep.passes() { Outcome::Ok } else { Outcome::False })
}

fn eval(path: &Path, formula: &str, lets: &[String], mesh: Option<Rat>, out: &mut dyn Write) -> Res {
    let f = load_tree(path)?;
    let mut val = Valuation::new();
    for l in lets {
        let (name, pt) = l.split_once('=').ok_or_else(|| Usage(format!("`--let {l}`: expected NAME=POINT")))?;
        val.insert(name.to_string(), f.point(pt)?);
    }
    let declared: Vec<&str> = val.keys().map(String::as_str).collect();
    let phi = parse_formula_declared(formula, &declared)?;
    if phi.is_quantifier_free() {
        writeln!(out, "{}", eval_qf(&f.tree, &phi, &val)?)?;
    } else {
        let m = default_mesh(mesh, &f.radius)?;
        writeln!(out, "{}", eval_quantified(&f.tree, &phi, &val, &m)?)?;
    }
    Ok(Outcome::Ok)
}

fn verdict(b: bool, out: &mut dyn Write) -> Res {
    writeln!(out, "{b}")?;
    Ok(if b { Outcome::Ok } else { Outcome::False })
}

fn type_command(t: TypeCommand, out: &mut dyn Write, err: &mut dyn Write) -> Res {
    match t {
        TypeCommand::Of { tree, a, b } => {
            let f = load_tree(&tree)?;
            let (a, b) = (f.point_list(&a)?, f.point_list(&b)?);
            let q = type_of(&f.tree, &a, &b).with_radius(f.radius.clone());
            writeln!(out, "context {}", tree.display())?;
            for x in &a {
                writeln!(out, "param {}", f.tree.describe(x))?;
            }
            writeln!(out, "radius {}", f.radius)?;
            write!(out, "{q}")?;
            Ok(Outcome::Ok)
        }
        TypeCommand::Eq { left, right } => {
            let (q1, q2) = (load_descriptor(&left)?, load_descriptor(&right)?);
            verdict(types_equal(&q1, &q2)?, out)
        }
        TypeCommand::Dist { ctx, s, t, left, right, radius, mesh } => {
            let (q1, q2) = match (ctx.as_deref(), s, t, left, right) {
                (Some("empty"), Some(s), Some(t), None, None) => {
                    let r = radius.unwrap_or_else(|| if s > t { s.clone() } else { t.clone() });
                    (empty_one_type(s, r.clone()), empty_one_type(t, r))
                }
                (None, None, None, Some(l), Some(r)) => (load_descriptor(&l)?, load_descriptor(&r)?),
                _ => {
                    return Err(Usage(
                        "expected `--ctx empty --s <rat> --t <rat>` or `--left <desc> --right <desc>`".into(),
                    ))
                }
            };
            if q1.arity() == 1 && q2.arity() == 1 {
                writeln!(out, "{}", one_type_distance(&q1, &q2)?)?;
            } else {
                let m = default_mesh(mesh, &q1.radius)?;
                writeln!(out, "{}", type_distance_search(&q1, &q2, &m)?)?;
            }
            Ok(Outcome::Ok)
        }
        TypeCommand::Realize { desc } => {
            let q = load_descriptor(&desc)?;
            match realize_type(&q) {
                Ok(real) => {
                    let pts: Vec<(String, PointRef)> =
                        real.points.iter().enumerate().map(|(i, p)| (format!("b{i}"), p.clone())).collect();
                    let r = if real.tree.radius() > q.radius { real.tree.radius() } else { q.radius.clone() };
                    write!(out, "{}", write_tree(&real.tree, &r, &pts))?;
                    Ok(Outcome::Ok)
                }
                Err(crate::types::TypeError::Inconsistent(v)) => {
                    writeln!(err, "{v}")?;
                    Ok(Outcome::False)
                }
                Err(e) => Err(e.into()),
            }
        }
        TypeCommand::Principal { desc, s, rho } => {
            let q = match (desc, s) {
                (Some(d), None) => load_descriptor(&d)?,
                (None, Some(RatList(s))) => {
                    let n = s.len();
                    let upper = rho.map(|r| r.0).unwrap_or_default();
                    if upper.len() != n * n.saturating_sub(1) / 2 {
                        return Err(Usage(format!("--rho needs {} values for {n} heights", n * n.saturating_sub(1) / 2)));
                    }
                    let mut m = vec![vec![Rat::zero(); n]; n];
                    let mut k = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            m[i][j] = upper[k].clone();
                            m[j][i] = upper[k].clone();
                            k += 1;
                        }
                    }
                    let r = s.iter().max().cloned().unwrap_or_else(Rat::zero);
                    empty_type(s, m, r)
                }
                _ => return Err(Usage("expected `--desc <file>` or `--s <rats> [--rho <rats>]`".into())),
            };
            verdict(is_principal(&q)?, out)
        }
    }
}

fn generate(g: GenerateArgs, out: &mut dyn Write) -> Res {
    let r = g.radius.clone();
    let (tree, points): (TreeSkeleton, Vec<(String, PointRef)>) = match g.family {
        Family::Rb => {
            let start = match &g.tree {
                Some(p) => load_tree(p)?.tree,
                None => TreeSkeleton::point("p"),
            };
            (rb_extend(&start, &r, g.depth)?, Vec::new())
        }
        Family::Degrees => {
            let cfg = GeneratorConfig {
                seed: g.seed,
                depth: g.depth,
                mesh: g.mesh.clone().unwrap_or_else(|| r.half()),
                degree_set: g.degrees.clone().map(|d| d.0).ok_or(Usage("`degrees` needs --degrees <k1,k2,...>".into()))?,
                radius: r.clone(),
            };
            (degree_family_tree(&cfg)?, Vec::new())
        }
        Family::Universal => {
            let (_, m, t) = au_sample_ball(g.mu, g.count, &r, g.seed)?;
            let pts = m
                .labels()
                .iter()
                .filter_map(|l| crate::realize::labeled_point(&t, l).map(|p| (l.clone(), p)))
                .collect();
            (t, pts)
        }
        Family::Primitive => {
            let lens = g.lengths.clone().map(|l| l.0).unwrap_or_default();
            let len = |i: usize| lens.get(i).cloned().or_else(|| lens.last().cloned()).unwrap_or_else(|| r.clone());
            let kind = match g.shape.ok_or(Usage("`primitive` needs --shape".into()))? {
                Shape::Segment => Primitive::Segment(len(0)),
                Shape::Tripod => Primitive::Tripod(len(0), len(1), len(2)),
                Shape::Star => Primitive::Star(g.k, len(0)),
                Shape::Caterpillar => Primitive::Caterpillar { spine: g.k, step: len(0), leg: len(1) },
            };
            (build_primitive(&kind, &r)?, Vec::new())
        }
    };
    write!(out, "{}", write_tree(&tree, &r, &points))?;
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("rtree").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn one_type_distance_over_empty_context() {
        let (code, out, _) = run_str(&["type", "dist", "--ctx", "empty", "--s", "2", "--t", "1/2"]);
        assert_eq!(code, 0);
        assert_eq!(out, "3/2\n");
    }

    #[test]
    fn float_flags_are_usage_errors() {
        let (code, _, err) = run_str(&["type", "dist", "--ctx", "empty", "--s", "1.5", "--t", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("exact rational"));
    }

    #[test]
    fn principal_from_flags() {
        assert_eq!(run_str(&["type", "principal", "--s", "1,2", "--rho", "1"]).0, 0);
        assert_eq!(run_str(&["type", "principal", "--s", "2,2", "--rho", "2"]).0, 1);
    }

    #[test]
    fn generate_primitive_tripod() {
        let (code, out, _) =
            run_str(&["generate", "primitive", "--shape", "tripod", "--lengths", "1,1,1", "--radius", "2"]);
        assert_eq!(code, 0);
        let f = parse_tree(&out).unwrap();
        assert_eq!(f.tree.radius(), Rat::int(2));
    }
}
