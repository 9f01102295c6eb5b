from pathlib import Path

import pytest
import yaml
from hypothesis import given, strategies as st

from readmellm.evalharness import check_library_utilization
from readmellm.evalharness.utilization import library_bindings, used_symbols

CASES = yaml.safe_load(
    (Path(__file__).parent / "fixtures" / "utilization_cases.yaml").read_text(encoding="utf-8"))


def test_case_set_covers_every_category():
    assert len(CASES) >= 20
    assert {c["category"] for c in CASES} == {"correct", "unused", "substitute", "empty"}


@pytest.mark.parametrize("case", CASES, ids=[c["id"] for c in CASES])
def test_labeled_snippet(case):
    assert check_library_utilization(case["code"], case["target"]) is case["expected"]


class TestBindings:
    def test_aliases_and_names(self):
        code = ("import supervision as sv, os\nimport supervision.utils\n"
                "from supervision.detection import Detections as D\nfrom os import path\n")
        aliases, names, star, rest = library_bindings(code, "supervision")
        assert aliases == {"sv", "supervision"} and names == {"D"} and not star
        assert rest == []

    def test_used_symbols(self):
        code = "import supervision as sv\nx = sv.Detections.empty()\nsv.crop_image(x)\n"
        assert used_symbols(code, "supervision") == {"Detections", "empty", "crop_image"}

    def test_star_ignores_local_and_builtin_calls(self):
        code = "from supervision import *\ndef helper():\n    pass\nprint(len(helper()))\n"
        assert used_symbols(code, "supervision") == set()


class TestRequiredSymbols:
    code = "import supervision as sv\nsv.scale_image(img, 0.5)\n"

    def test_required_present(self):
        assert check_library_utilization(self.code, "supervision", ["supervision.scale_image"])

    def test_required_absent(self):
        assert not check_library_utilization(self.code, "supervision", ["crop_image"])

    def test_imported_name(self):
        code = "from supervision import crop_image\ncrop_image(img, box)\n"
        assert check_library_utilization(code, "supervision", ["crop_image"])


BODY_LINES = [
    "x = sv.crop_image(img, box)",
    "y = cv2.imread('a.png')",
    "print(x)",
    "z = np.zeros(3)",
    "# sv.scale_image(img)",
    "s = 'sv.resize_image(img)'",
    "cv2.imwrite('b.png', y)",
]


@given(st.lists(st.sampled_from(BODY_LINES), max_size=7), st.randoms())
def test_order_insensitive(lines, rng):
    head = "import supervision as sv\nimport cv2\nimport numpy as np\n"
    shuffled = list(lines)
    rng.shuffle(shuffled)
    a = check_library_utilization(head + "\n".join(lines), "supervision")
    b = check_library_utilization(head + "\n".join(shuffled), "supervision")
    assert a == b == any(line.startswith("x = sv.") for line in lines)
