use hardy_cli::config::{Cell, Command};
use hardy_cli::report::render_csv;
use hardy_cli::{ReportRow, Status, TraceKind, TracePoint};
use hardy_core::{ConeSpec, HardyParams};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -10.0f64..10.0]
}

fn row_strategy() -> impl Strategy<Value = ReportRow> {
    (
        (2usize..=6, 1.1f64..4.0, 0.0f64..3.0, -2.0f64..2.0),
        prop::sample::select(vec![
            ConeSpec::FullSpace,
            ConeSpec::PuncturedSpace,
            ConeSpec::ComplementSigma0,
            ConeSpec::HalfSpace,
            ConeSpec::band(0.2, 1.1).unwrap(),
        ]),
        (
            prop::option::of(finite()),
            prop::option::of(finite()),
            prop::option::of(finite()),
        ),
        prop::collection::vec((finite(), finite()), 0..5),
        prop::option::of(prop::sample::select(vec![
            TraceKind::Delta,
            TraceKind::H,
            TraceKind::Profile,
        ])),
        prop::sample::select(vec![Status::Ok, Status::NoClosedForm, Status::SolverFail]),
        prop::option::of(any::<bool>()),
        prop::option::of(".*"),
    )
        .prop_map(
            |((d, p, a, b), cone, (closed, numeric, extra), trace, kind, status, checks, message)| {
                let params = HardyParams::new(d, 1, p, a, b).unwrap();
                let mut row = ReportRow::new(Command::Verify, &Cell { params, cone }, 64);
                row.closed_form = closed;
                row.numeric_m = numeric;
                row.gap = closed.zip(numeric).map(|(c, n)| n - c);
                row.extrapolated = extra;
                row.quotient_trace = trace.into_iter().map(|(x, value)| TracePoint { x, value }).collect();
                row.trace_kind = kind;
                row.status = status;
                row.checks_passed = checks;
                row.message = message;
                row
            },
        )
}

proptest! {
    #[test]
    fn rows_round_trip_through_json(row in row_strategy()) {
        let text = serde_json::to_string(&row).unwrap();
        let back: ReportRow = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, row);
    }

    #[test]
    fn csv_floats_round_trip(row in row_strategy()) {
        let bytes = render_csv(std::slice::from_ref(&row)).unwrap();
        let mut reader = csv::Reader::from_reader(bytes.as_slice());
        let rec = reader.records().next().unwrap().unwrap();
        prop_assert_eq!(rec.len(), 22);
        prop_assert_eq!(rec[3].parse::<f64>().unwrap(), row.p);
        let closed = (!rec[9].is_empty()).then(|| rec[9].parse::<f64>().unwrap());
        prop_assert_eq!(closed, row.closed_form);
        let trace: Vec<TracePoint> = if rec[15].is_empty() {
            Vec::new()
        } else {
            rec[15]
                .split(';')
                .map(|pair| {
                    let (x, v) = pair.split_once(':').unwrap();
                    TracePoint { x: x.parse().unwrap(), value: v.parse().unwrap() }
                })
                .collect()
        };
        prop_assert_eq!(trace, row.quotient_trace);
        prop_assert_eq!(&rec[21], row.message.as_deref().unwrap_or(""));
    }
}

#[test]
fn gap_is_present_iff_both_values_are() {
    let cell = Cell {
        params: HardyParams::new(3, 1, 2.0, 0.0, 0.0).unwrap(),
        cone: ConeSpec::ComplementSigma0,
    };
    let rows = hardy_cli::commands::run(&hardy_cli::RunConfig {
        command: Command::Table,
        cells: vec![
            cell,
            Cell {
                params: HardyParams::new(3, 1, 3.0, 0.5, 0.0).unwrap(),
                cone: ConeSpec::ComplementSigma0,
            },
        ],
        mesh_size: 64,
        delta_list: vec![],
        h_list: vec![],
        output_path: None,
        format: Default::default(),
        tol: 1e-3,
        jobs: 2,
    })
    .unwrap();
    for r in &rows {
        assert_gap_iff_both(r);
    }
    assert_eq!(rows[1].status, Status::NoClosedForm);
    assert!(!rows[1].is_failure(1e-3));
}

fn assert_gap_iff_both(r: &ReportRow) {
    assert_eq!(r.gap.is_some(), r.closed_form.is_some() && r.numeric_m.is_some());
}
