import textwrap
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from readmellm.extract import (
    ApiSymbol,
    ExampleSnippet,
    ExtractWarning,
    UnknownProfileError,
    extract_signature,
    fenced_blocks,
    identifiers,
    mine_examples,
    pair_examples,
    scan_sources,
    strip_to_signatures,
    symbols_from_text,
)

SYNTHETIC = '''\
import os


def top_one(a):
    return a


class Widget:
    """A widget."""

    size: int = 3

    def grow(self, by: int = 1) -> None:
        self.size += by

    def _shrink(self):
        def helper():
            return 1
        self.size -= helper()


def top_two(*args) -> int:
    return len(args)
'''


@pytest.fixture
def tree(tmp_path):
    pkg = tmp_path / "lib"
    pkg.mkdir()
    (pkg / "mod.py").write_text(SYNTHETIC)
    return tmp_path


class TestScanSources:
    def test_counts(self, tree):
        syms = scan_sources(tree)
        # manual count: 2 functions + 1 class + 2 methods; nested helper excluded
        assert [(s.kind, s.qualified_name) for s in syms] == [
            ("function", "lib.mod.top_one"),
            ("class", "lib.mod.Widget"),
            ("method", "lib.mod.Widget.grow"),
            ("method", "lib.mod.Widget._shrink"),
            ("function", "lib.mod.top_two"),
        ]

    def test_empty_dir(self, tmp_path):
        assert scan_sources(tmp_path) == []

    def test_unknown_profile(self, tmp_path):
        with pytest.raises(UnknownProfileError):
            scan_sources(tmp_path, "cobol")

    def test_visibility_and_filter(self, tree):
        syms = scan_sources(tree)
        assert {s.name: s.visibility for s in syms}["_shrink"] == "private"
        public = scan_sources(tree, public_only=True)
        assert "_shrink" not in {s.name for s in public}
        assert len(public) == 4

    def test_slice_fidelity(self, tree):
        source = (tree / "lib" / "mod.py").read_text()
        lines = source.split("\n")
        for s in scan_sources(tree):
            first, last = s.lines
            assert 1 <= first <= last <= len(lines)
            assert s.full_text == "\n".join(lines[first - 1:last])
            assert s.full_text.startswith(s.signature_text)

    def test_docstring(self, tree):
        by_name = {s.name: s for s in scan_sources(tree)}
        assert by_name["Widget"].docstring == "A widget."
        assert by_name["top_one"].docstring is None

    def test_unreadable_file_warns_and_continues(self, tree):
        (tree / "lib" / "bad.py").write_bytes(b"def f():\n    return '\xff\xfe'\n")
        with pytest.warns(ExtractWarning, match="bad.py"):
            syms = scan_sources(tree)
        assert len(syms) == 5

    def test_header_without_colon_is_skipped(self, tmp_path):
        (tmp_path / "m.py").write_text("def broken(x)\n    return x\n\ndef ok():\n    pass\n")
        with pytest.warns(ExtractWarning, match="without ':'"):
            syms = scan_sources(tmp_path)
        assert [s.name for s in syms] == ["ok"]

    def test_deterministic_and_parallel(self, fixtures_dir):
        root = fixtures_dir / "mini_supervision"
        assert scan_sources(root) == scan_sources(root) == scan_sources(root, workers=4)

    def test_excluded_dirs(self, fixtures_dir):
        syms = scan_sources(fixtures_dir / "mini_digitalrf")
        assert all(s.path.startswith("digital_rf/") for s in syms)

    def test_crop_image_signature(self, fixtures_dir):
        syms = scan_sources(fixtures_dir / "mini_supervision")
        crop = next(s for s in syms if s.name == "crop_image")
        assert crop.qualified_name == "supervision.utils.image.crop_image"
        assert crop.signature_text == (
            "def crop_image(image: ImageType, xyxy: Union[np.ndarray, "
            "Tuple[int, int, int, int]]) -> ImageType:")

    def test_private_helpers_included(self, fixtures_dir):
        names = {s.name for s in scan_sources(fixtures_dir / "mini_supervision")}
        assert "_negotiate_tiles_format" in names


class TestExtractSignature:
    def test_long_body(self):
        src = "def work(a, b=2):\n" + "".join(f"    x{i} = a + {i}\n" for i in range(10))
        (sym,) = symbols_from_text(src)
        assert extract_signature(sym, "signature_only") == "def work(a, b=2):"
        assert extract_signature(sym, "full") == src.rstrip("\n")

    def test_zero_parameter(self):
        (sym,) = symbols_from_text("def close(self):")
        assert extract_signature(sym, "signature_only") == "def close(self):"
        assert extract_signature(sym, "full") == "def close(self):"

    def test_detections_class_shape(self, fixtures_dir):
        syms = scan_sources(fixtures_dir / "mini_supervision")
        det = next(s for s in syms if s.name == "Detections")
        out = extract_signature(det, "signature_only")
        lines = out.split("\n")
        assert lines[:3] == ["@dataclass", "class Detections:", "    xyxy: np.ndarray"]
        assert "    @classmethod" in lines
        assert "    def from_ultralytics(cls, ultralytics_results) -> Detections:" in lines
        assert "    def is_empty(self) -> bool:" in lines
        # no bodies and no docstrings
        assert "return" not in out
        assert '"""' not in out

    def test_inline_body_is_cut(self):
        (sym,) = symbols_from_text("def f(x): return x * 2")
        assert extract_signature(sym, "signature_only") == "def f(x):"

    def test_bad_mode(self):
        (sym,) = symbols_from_text("def f():\n    pass")
        with pytest.raises(ValueError):
            extract_signature(sym, "abridged")

    def test_method_keeps_indentation(self, tree):
        grow = next(s for s in scan_sources(tree) if s.name == "grow")
        assert extract_signature(grow, "signature_only") == "    def grow(self, by: int = 1) -> None:"

    def test_stripping_is_line_subsequence(self, fixtures_dir):
        for sym in scan_sources(fixtures_dir / "mini_supervision"):
            out = extract_signature(sym, "signature_only").split("\n")
            src = iter(sym.full_text.split("\n"))
            assert all(line in src for line in out), sym.qualified_name

    def test_idempotent(self, fixtures_dir):
        for sym in scan_sources(fixtures_dir / "mini_supervision"):
            once = extract_signature(sym, "signature_only")
            assert strip_to_signatures(once) == once


_names = st.sampled_from(["alpha", "beta", "gamma", "delta"])


@st.composite
def _sources(draw):
    lines = []
    for i in range(draw(st.integers(1, 5))):
        name = f"{draw(_names)}{i}"
        params = ", ".join(draw(st.lists(_names, max_size=3, unique=True)))
        lines.append(f"def {name}({params}):")
        for j in range(draw(st.integers(1, 4))):
            lines.append(f"    v{j} = {draw(st.integers(0, 99))}")
        lines.append("")
    return "\n".join(lines)


@settings(max_examples=100, deadline=None)
@given(_sources())
def test_generated_sources_strip_to_headers(src):
    headers = [ln for ln in src.split("\n") if ln.startswith("def ")]
    syms = symbols_from_text(src)
    assert [s.signature_text for s in syms] == headers
    assert [extract_signature(s, "signature_only") for s in syms] == headers


class TestMineExamples:
    def test_tab_label(self, fixtures_dir):
        ex = mine_examples(fixtures_dir / "mini_supervision")
        ultra = [e for e in ex if e.label == "Ultralytics"]
        assert len(ultra) == 1
        assert "sv.Detections.from_ultralytics" in ultra[0].body
        # fence indentation is removed
        assert ultra[0].body.startswith("import cv2")

    def test_single_fence_under_heading(self, tmp_path):
        (tmp_path / "guide.md").write_text(
            "# Ultralytics\n\nSome prose.\n\n```python\nimport supervision as sv\n"
            "detections = sv.Detections.from_ultralytics(results)\n```\n")
        (ex,) = mine_examples(tmp_path)
        assert ex.label == "Ultralytics"
        assert ex.path == "guide.md"
        assert ex.lines == (6, 7)
        assert {"sv", "Detections", "from_ultralytics"} <= ex.referenced_identifiers

    def test_non_python_fences_skipped(self, fixtures_dir):
        ex = mine_examples(fixtures_dir / "mini_supervision")
        assert all(e.path != "README.md" for e in ex)

    def test_no_docs(self, tree):
        assert mine_examples(tree) == []

    def test_example_scripts(self, fixtures_dir):
        ex = mine_examples(fixtures_dir / "mini_digitalrf")
        write = [e for e in ex if e.label == "example_write_digital_rf.py"]
        assert len(write) == 1
        assert write[0].kind == "script"
        assert "digital_rf.DigitalRFWriter" in write[0].body

    def test_setext_heading_and_tilde_fence(self):
        text = "Usage\n-----\n\n~~~~\nrun()\n~~~~\n"
        (ex,) = fenced_blocks(text)
        assert ex.label == "Usage" and ex.body == "run()"

    def test_identifiers_subset_of_body(self, fixtures_dir):
        for ex in mine_examples(fixtures_dir / "mini_supervision"):
            assert ex.body
            assert ex.referenced_identifiers <= identifiers(ex.body)


def _sym(name):
    return ApiSymbol(f"lib.{name}", "function", f"def {name}():", f"def {name}():",
                     None, "lib.py", (1, 1))


def _ex(body):
    return ExampleSnippet(body, None, "ex.md", (1, 1), identifiers(body))


class TestPairExamples:
    def test_token_membership(self):
        ex = _ex("out = sv.crop_image(image, box)")
        pairing = pair_examples([_sym("crop_image"), _sym("scale_image")], [ex])
        assert pairing == {"lib.crop_image": [ex], "lib.scale_image": []}

    def test_no_examples(self):
        assert pair_examples([_sym("a"), _sym("b")], []) == {"lib.a": [], "lib.b": []}

    def test_one_example_many_symbols(self):
        ex = _ex("w.rf_write(data)\nw.close()")
        pairing = pair_examples([_sym("rf_write"), _sym("close")], [ex])
        assert pairing == {"lib.rf_write": [ex], "lib.close": [ex]}

    def test_soundness(self, fixtures_dir):
        root = fixtures_dir / "mini_supervision"
        syms = scan_sources(root)
        pairing = pair_examples(syms, mine_examples(root))
        by_name = {s.qualified_name: s for s in syms}
        for qual, exs in pairing.items():
            for ex in exs:
                assert by_name[qual].name in ex.referenced_identifiers
