"""Per-view linear classifiers, the lookup stand-in, and the adapter bridge."""

from __future__ import annotations

import sys

import pytest

from trustvet.errors import AdapterError, DegenerateTrainingError, SchemaError, UndefinedInputError
from trustvet.lineassess.classifier import (
    ADAPTER_ENV_VAR,
    AdapterLineClassifier,
    LinearLineClassifier,
    LookupLineClassifier,
    TrainConfig,
    load_model,
    save_model,
    train_classifier,
    training_accuracy,
)
from trustvet.lineassess.dataset import LineLabel, LineSample, Origin
from trustvet.lineassess.features import ALL_VIEWS, FeatureView

RISKY = [
    "buf = fopen(path, mode);",
    "n = fread(buf, size, count, fp);",
    "strcpy(dst, src);",
    "memcpy(out, in, len);",
    "p = malloc(len);",
    "q = realloc(p, len * 2);",
]
PLAIN = [
    "total = total + 1;",
    "i = i + step;",
    "flag = a && b;",
    "result = x * y;",
    "index = base - offset;",
    "ratio = num / den;",
]


def samples():
    out = []
    for j in range(6):
        for i, text in enumerate(RISKY):
            out.append(
                LineSample(
                    text=text.replace(";", f" + {j};") if j else text,
                    label=LineLabel.VULNERABLE,
                    origin=Origin(f"r{j}", i + 1),
                )
            )
        for i, text in enumerate(PLAIN):
            out.append(
                LineSample(
                    text=text.replace(";", f" + {j};") if j else text,
                    label=LineLabel.NON_VULNERABLE,
                    origin=Origin(f"p{j}", i + 1),
                )
            )
    return out


class TestTraining:
    @pytest.mark.parametrize("view", ALL_VIEWS)
    def test_separates_obvious_populations(self, view):
        clf = train_classifier(samples(), view)
        assert training_accuracy(clf, samples()) == 1.0

    def test_deterministic_for_a_seed(self):
        a = train_classifier(samples(), FeatureView.TOKEN_NGRAM, TrainConfig(seed=3))
        b = train_classifier(samples(), FeatureView.TOKEN_NGRAM, TrainConfig(seed=3))
        assert a.weights == b.weights and a.bias == b.bias

    def test_saved_bytes_deterministic(self, tmp_path):
        one, two = tmp_path / "one.json", tmp_path / "two.json"
        save_model(train_classifier(samples(), FeatureView.CHAR_NGRAM, TrainConfig(seed=3)), one)
        save_model(train_classifier(samples(), FeatureView.CHAR_NGRAM, TrainConfig(seed=3)), two)
        assert one.read_bytes() == two.read_bytes()

    def test_single_class_rejected(self):
        only_benign = [s for s in samples() if s.label is LineLabel.NON_VULNERABLE]
        with pytest.raises(DegenerateTrainingError):
            train_classifier(only_benign, FeatureView.TOKEN_NGRAM)

    def test_heldout_accuracy_recorded(self):
        clf = train_classifier(samples(), FeatureView.TOKEN_NGRAM)
        assert clf.heldout_accuracy is not None
        assert 0.0 <= clf.heldout_accuracy <= 1.0

    def test_votes_follow_scores(self):
        clf = train_classifier(samples(), FeatureView.TOKEN_NGRAM)
        vote, score = clf.classify("y = fopen(path, m);")
        assert vote == (1 if score >= clf.threshold else 0)
        assert vote == 0  # fopen lines look vulnerable
        vote_plain, _ = clf.classify("total = total + 9;")
        assert vote_plain == 1


class TestLinearScoring:
    def test_score_overflow_safe(self):
        clf = LinearLineClassifier(
            view=FeatureView.TOKEN_NGRAM,
            vocabulary={"1:x": 0},
            weights=[5000.0],
            bias=0.0,
        )
        vote, score = clf.classify("x")
        assert vote == 1 and score == pytest.approx(1.0)
        clf_neg = LinearLineClassifier(
            view=FeatureView.TOKEN_NGRAM,
            vocabulary={"1:x": 0},
            weights=[-5000.0],
            bias=0.0,
        )
        vote, score = clf_neg.classify("x")
        assert vote == 0 and score == pytest.approx(0.0)

    def test_empty_line_rejected(self):
        clf = LookupLineClassifier(non_benign=frozenset())
        with pytest.raises(UndefinedInputError):
            clf.classify("   // just a comment")


class TestPersistence:
    def test_linear_round_trip(self, tmp_path):
        clf = train_classifier(samples(), FeatureView.SYNTAX_SHAPE, TrainConfig(seed=9))
        path = tmp_path / "m.json"
        save_model(clf, path)
        again = load_model(path)
        assert isinstance(again, LinearLineClassifier)
        assert again.weights == clf.weights
        assert again.classify("strcpy(a, b);") == clf.classify("strcpy(a, b);")

    def test_lookup_round_trip(self, tmp_path):
        clf = LookupLineClassifier(non_benign=frozenset({"x = fopen ( p ) ;"}), threshold=0.4)
        path = tmp_path / "m.json"
        save_model(clf, path)
        again = load_model(path)
        assert isinstance(again, LookupLineClassifier)
        assert again.non_benign == clf.non_benign
        assert again.threshold == 0.4

    def test_adapter_round_trip(self, tmp_path, monkeypatch):
        monkeypatch.delenv(ADAPTER_ENV_VAR, raising=False)
        clf = AdapterLineClassifier(command=("scorer", "--fast"), threshold=0.7, timeout=2.0)
        path = tmp_path / "m.json"
        save_model(clf, path)
        again = load_model(path)
        assert isinstance(again, AdapterLineClassifier)
        assert again.command == ("scorer", "--fast")
        assert again.threshold == 0.7

    def test_env_var_overrides_adapter_command(self, tmp_path, monkeypatch):
        clf = AdapterLineClassifier(command=("scorer",))
        path = tmp_path / "m.json"
        save_model(clf, path)
        monkeypatch.setenv(ADAPTER_ENV_VAR, "alt-scorer --flag value")
        again = load_model(path)
        assert again.command == ("alt-scorer", "--flag", "value")

    def test_argument_overrides_adapter_command(self, tmp_path, monkeypatch):
        monkeypatch.delenv(ADAPTER_ENV_VAR, raising=False)
        clf = AdapterLineClassifier(command=("scorer",))
        path = tmp_path / "m.json"
        save_model(clf, path)
        again = load_model(path, adapter_command="other-scorer --slow")
        assert again.command == ("other-scorer", "--slow")

    def test_env_var_beats_argument(self, tmp_path, monkeypatch):
        clf = AdapterLineClassifier(command=("scorer",))
        path = tmp_path / "m.json"
        save_model(clf, path)
        monkeypatch.setenv(ADAPTER_ENV_VAR, "env-scorer")
        again = load_model(path, adapter_command="arg-scorer")
        assert again.command == ("env-scorer",)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"kind": "alien"}')
        with pytest.raises(SchemaError):
            load_model(path)


class TestAdapterBridge:
    def stub(self, data_dir):
        return (sys.executable, str(data_dir / "adapter_stub.py"))

    def test_scores_from_child_process(self, data_dir):
        clf = AdapterLineClassifier(command=self.stub(data_dir), timeout=10.0)
        try:
            vote, score = clf.classify("buf = fopen(path, m);")
            assert (vote, score) == (0, 0.1)
            vote, score = clf.classify("i = i + 1;")
            assert (vote, score) == (1, 0.9)
        finally:
            clf.close()

    def test_missing_command_fails_loudly(self):
        clf = AdapterLineClassifier(command=("definitely-not-a-binary-7f3a",))
        with pytest.raises(AdapterError):
            clf.classify("x = 1;")

    def test_wrong_id_rejected(self, tmp_path):
        bad = tmp_path / "bad.py"
        bad.write_text(
            "import json, sys\n"
            "for raw in sys.stdin:\n"
            "    json.loads(raw)\n"
            "    sys.stdout.write(json.dumps({'id': 999, 'score': 0.5}) + '\\n')\n"
            "    sys.stdout.flush()\n"
        )
        clf = AdapterLineClassifier(command=(sys.executable, str(bad)), timeout=10.0)
        try:
            with pytest.raises(AdapterError):
                clf.classify("x = 1;")
        finally:
            clf.close()

    def test_non_json_answer_rejected(self, tmp_path):
        bad = tmp_path / "noise.py"
        bad.write_text(
            "import sys\n"
            "for raw in sys.stdin:\n"
            "    sys.stdout.write('not json\\n')\n"
            "    sys.stdout.flush()\n"
        )
        clf = AdapterLineClassifier(command=(sys.executable, str(bad)), timeout=10.0)
        try:
            with pytest.raises(AdapterError):
                clf.classify("x = 1;")
        finally:
            clf.close()

    def test_silent_child_times_out(self, tmp_path):
        slow = tmp_path / "slow.py"
        slow.write_text("import time\ntime.sleep(30)\n")
        clf = AdapterLineClassifier(command=(sys.executable, str(slow)), timeout=0.5)
        try:
            with pytest.raises(AdapterError):
                clf.classify("x = 1;")
        finally:
            clf.close()

    def test_out_of_range_score_rejected(self, tmp_path):
        bad = tmp_path / "big.py"
        bad.write_text(
            "import json, sys\n"
            "for raw in sys.stdin:\n"
            "    req = json.loads(raw)\n"
            "    sys.stdout.write(json.dumps({'id': req['id'], 'score': 7.0}) + '\\n')\n"
            "    sys.stdout.flush()\n"
        )
        clf = AdapterLineClassifier(command=(sys.executable, str(bad)), timeout=10.0)
        try:
            with pytest.raises(AdapterError):
                clf.classify("x = 1;")
        finally:
            clf.close()
