import json
import math

import numpy as np

from ivbgmm import DgpSpec, ModelIndex
from ivbgmm.inference import EstimateReport
from ivbgmm.reporting import dumps, fmt, report_record, summary_to_csv, summary_to_json, summary_to_text
from ivbgmm.simulation import McSummary, MethodSummary


def toy_summary():
    spec = DgpSpec.from_case(1, "a", 100)
    rows = {
        "median": MethodSummary("median", np.array([0.1, 0.3]), np.full(2, np.nan), np.full(2, np.nan), 0.0),
        "naive_tsls": MethodSummary("naive_tsls", np.array([0.3, 0.31]), np.array([1e-3, 2e-3]),
                                    np.array([0.0, 1.0]), 0.0, n_failed=1),
    }
    return McSummary(spec, reps=3, seed=7, rows=rows)


def test_fmt():
    assert fmt(None) == "NA" and fmt(math.nan) == "NA"
    assert fmt(0.1) == "0.1" and float(fmt(1 / 3)) == 1 / 3
    assert fmt(np.float64(2.5)) == "2.5"


def test_csv_rows_in_table_order():
    lines = summary_to_csv(toy_summary()).splitlines()
    assert lines[0] == "method,bias,var,mse,cp"
    assert lines[1].startswith("naive_tsls,") and lines[2] == "median,0.2,NA,0.05,NA"


def test_json_valid_and_canonical():
    text = summary_to_json(toy_summary())
    obj = json.loads(text)
    assert dumps(obj) == text
    assert obj["rows"][1]["cp"] is None and obj["rows"][0]["n_failed"] == 1


def test_text_table():
    text = summary_to_text(toy_summary())
    assert "N/A" in text and "(1 failed)" in text
    assert text.splitlines()[2].split()[0] == "naive_tsls"


def test_report_record_bayes():
    r = EstimateReport("proposed_bayes", 0.5, 0.1, (0.3, 0.7), validity=np.array([0.0, 1.0, 0.25]),
                       models=[(ModelIndex((0,)), 0.75), (ModelIndex((0, 2)), 0.25)])
    rec = report_record(r, ["a", "b", "c"])
    assert rec["acceptable_models"] == [{"omega": ["a"], "weight": 0.75}, {"omega": ["a", "c"], "weight": 0.25}]
    assert rec["validity_probabilities"] == [0.0, 1.0, 0.25]
    assert report_record(EstimateReport("median", 0.2)) == {"estimate": 0.2, "se": None, "ci95": None}
