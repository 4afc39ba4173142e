from toruskam.kam import CSV_COLUMNS, KamReport, KamRow, NoConvergence, rows_to_csv
from toruskam.lattice import DomainSpec


def make_row(k):
    return KamRow(
        k=k,
        q_k=2**k,
        v_min=2 ** (k + 1) + 1,
        delta_k=0.01 / (k + 1) ** 2,
        eps_k=0.1,
        r_k=0.5,
        residual_bound=10.0 ** (-3 * (k + 1)),
        scaled_residual=1e-3,
        phi_norm=1e-3,
        phi_increment=1e-3,
        dropped_mass=0.0,
    )


def test_csv_columns_and_rows(tmp_path):
    report = KamReport(final_domain=DomainSpec(eps=0.1, r=0.5), rows=[make_row(0), make_row(1)])
    lines = report.to_csv().splitlines()
    assert lines[0] == "k,q_k,delta_k,eps_k,r_k,residual_bound,phi_norm,dropped_mass"
    assert len(lines) == 3
    assert lines[2].startswith("1,2,0.0025,")
    path = tmp_path / "rows.csv"
    report.save_csv(path)
    assert path.read_text() == report.to_csv()
    assert report.steps == 2


def test_report_round_trip():
    report = KamReport(final_domain=DomainSpec(eps=0.1, r=0.5), rows=[make_row(0)], converged=True)
    assert KamReport.from_dict(report.to_dict()) == report


def test_no_convergence_rows_render_as_csv():
    error = NoConvergence("stalled", rows=[make_row(0).to_dict()])
    text = rows_to_csv(error.to_dict()["rows"])
    assert text.splitlines()[0].split(",") == CSV_COLUMNS
