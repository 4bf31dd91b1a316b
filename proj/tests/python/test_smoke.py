# Copyright 2026 The yolopose Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import json
import math

import numpy as np
import pytest

import yolopose as yp


def stick(x0=100.0, y0=100.0):
    g = yp.PoseInstance()
    g.bbox = yp.BBox.from_top_left(x0, y0, 80.0, 200.0)
    g.area = 80.0 * 200.0
    g.image_id = 1
    g.id = 1
    g.keypoints = [yp.GtKeypoint(x0 + 4.0 * n, y0 + 11.0 * n, 2) for n in range(yp.NUM_KEYPOINTS)]
    return g


def copied(g, score=0.9):
    d = yp.Detection()
    d.bbox = g.bbox
    d.box_conf = score
    d.class_conf = 1.0
    d.image_id = g.image_id
    d.keypoints = [yp.PredKeypoint(k.x, k.y, 0.9) for k in g.keypoints]
    return d


def test_box_overlap():
    a = yp.BBox(0.5, 0.5, 1.0, 1.0)
    assert yp.iou(a, a) == 1.0
    assert yp.iou(a, yp.BBox(1.0, 0.5, 1.0, 1.0)) == pytest.approx(1.0 / 3.0)
    assert yp.ciou(a, a) == 1.0
    assert 1.0 - yp.ciou(yp.BBox(0, 0, 100, 1), yp.BBox(1000, 1000, 1, 100)) > 2.0


def test_oks_of_an_exact_copy_is_one():
    g = stick()
    assert yp.oks(copied(g).keypoints, g) == pytest.approx(1.0)
    unlabeled = stick()
    unlabeled.keypoints = [yp.GtKeypoint(0.0, 0.0, 0)] * yp.NUM_KEYPOINTS
    assert yp.oks(copied(g).keypoints, unlabeled) is None


def test_encode_decode_round_trip():
    g = stick(300.0, 200.0)
    assignments = yp.assign([g], 640)
    assert assignments
    slot, index = assignments[0]
    assert index == 0
    values, mask = yp.encode(g, slot)
    assert values.shape == (yp.NUM_CHANNELS,)
    assert mask.all()
    d = yp.decode_cell(values, slot)
    assert d.bbox.cx == pytest.approx(g.bbox.cx, abs=1e-6)
    for p, k in zip(d.keypoints, g.keypoints):
        assert p.x == pytest.approx(k.x, abs=1e-6)
        assert p.y == pytest.approx(k.y, abs=1e-6)


def test_rendered_heads_decode_to_the_instance():
    g = stick(300.0, 200.0)
    scales = yp.render_heads([g], 640)
    assert [s.shape for s in scales] == [(3, 80, 80, 57), (3, 40, 40, 57), (3, 20, 20, 57), (3, 10, 10, 57)]
    dets = yp.postprocess(yp.decode(scales, 640))
    assert len(dets) == 1
    assert yp.evaluation_oks(dets[0], g) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(yp.Error, match="scale 1"):
        yp.decode([scales[0], scales[0], scales[2], scales[3]], 640)


def test_losses_return_value_and_gradient():
    g = stick(300.0, 200.0)
    slot, _ = yp.assign([g], 640)[0]
    values, _ = yp.encode(g, slot)
    value, grad = yp.loss_kpts(values, slot, g)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert np.abs(grad).max() == pytest.approx(0.0, abs=1e-9)
    raw = np.zeros(yp.NUM_CHANNELS)
    for variant in ("oks", "l1", "scale_l1"):
        value, grad = yp.loss_kpts(raw, slot, g, variant)
        assert value > 0.0
        assert grad.shape == (yp.NUM_CHANNELS,)
    value, _ = yp.loss_cls(raw, False)
    assert value == pytest.approx(math.log(2.0))
    with pytest.raises(yp.Error):
        yp.loss_kpts(np.zeros(5), slot, g)


def test_nms_keeps_the_higher_score():
    g = stick()
    low, high = copied(g, 0.5), copied(g, 0.9)
    kept = yp.nms([low, high], 0.65)
    assert len(kept) == 1
    assert kept[0].box_conf == 0.9


def test_evaluate_perfect_and_empty():
    g = stick()
    gt = yp.Dataset()
    gt.images = [yp.ImageInfo(1, 640, 640)]
    gt.instances = [g]
    report = yp.evaluate(gt, [copied(g)])
    assert report.ap == pytest.approx(1.0)
    assert report.ar == pytest.approx(1.0)
    assert yp.evaluate(gt, []).ap == 0.0


def test_coco_and_results_round_trip():
    cfg = yp.SynthConfig()
    cfg.num_images = 2
    data = yp.synth(cfg)
    text = yp.dump_coco(data)
    assert json.loads(text)["images"]
    again = yp.parse_coco(text)
    assert yp.dump_coco(again) == text
    g = data.instances[0]
    dets = yp.parse_results(yp.dump_results([copied(g)]))
    assert dets[0].keypoints[0].x == pytest.approx(g.keypoints[0].x)
    with pytest.raises(yp.FormatError, match="malformed JSON"):
        yp.parse_coco("{")
    assert issubclass(yp.FormatError, yp.Error)


def test_fit_and_ablate_are_deterministic():
    cfg = yp.SynthConfig()
    cfg.num_images = 1
    cfg.max_persons = 1
    data = yp.synth(cfg)
    fc = yp.FitConfig()
    fc.steps = 5
    fc.schedule = "cosine"
    fc.kpt_loss = "l1"
    assert fc.kpt_loss == "l1"
    first = yp.fit(data, config=fc)
    second = yp.fit(data, config=fc)
    assert len(first.trajectory) == 6
    assert [r.total for r in first.trajectory] == [r.total for r in second.trajectory]
    assert first.trajectory[-1].total < first.trajectory[0].total
    rows = yp.ablate(data, fc)
    assert {r["variant"] for r in rows} == {"oks", "l1", "scale_l1"}
    with pytest.raises(yp.Error):
        fc.schedule = "linear"


def test_gradchecks_pass():
    suites = yp.run_gradchecks(10, 3)
    assert suites
    assert all(s.ok for s in suites)
