#!/usr/bin/env python3
# Copyright 2026 The prm-vision Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the frame fixtures and scripted backends under data/."""

import json
import pathlib

from PIL import Image, ImageDraw

ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA = ROOT / "data"

PHONE = "The driver is holding a phone to their ear and looking away from the road."
ATTENTIVE = "The driver is looking straight ahead with both hands on the wheel."


def frame(path, hue, marker):
    img = Image.new("RGB", (64, 48), (hue, 90, 255 - hue))
    draw = ImageDraw.Draw(img)
    draw.rectangle([8 + marker % 40, 8, 20 + marker % 40, 30], fill=(240, 240, 240))
    img.save(path, optimize=False)


def carmate():
    out = DATA / "carmate" / "frames"
    out.mkdir(parents=True, exist_ok=True)
    labels = []
    for i in range(20):
        label = "phone" if (i // 5) % 2 == 0 else "attentive"
        name = f"{i:03d}.png"
        frame(out / name, 40 if label == "phone" else 200, i * 3)
        labels.append(f"{name}\t{label}")
    (out / "labels.tsv").write_text("\n".join(labels) + "\n")
    script = {
        "default": "The driver is seated behind the wheel.",
        "entries": [
            {"label": "phone", "text": PHONE},
            {"label": "attentive", "text": ATTENTIVE},
        ],
    }
    (DATA / "carmate" / "mock_script.json").write_text(json.dumps(script, indent=2) + "\n")
    stub = {
        "default": "Keep your attention on the road.",
        "entries": [
            {"user_contains": "phone",
             "text": "Please put down your phone and focus on the road."},
            {"user_contains": "looking straight ahead",
             "text": "Well done, keep your eyes on the road and maintain focus."},
        ],
    }
    (DATA / "carmate" / "llm_stub.json").write_text(json.dumps(stub, indent=2) + "\n")


VISUAL = {
    "focused_description": "Describe the driver's current level of focus on driving based on the visual cues.",
    "behavioral_description": "Describe the driver's overall behavior, including any distractions or signs of fatigue.",
    "ontological": "Identify and describe the ontological entities related to driving focus in the current scene.",
}
LLM = {
    "consultative": "Based on the visual description, provide a consultation to the driver about their current level of focus on driving.",
    "action_oriented": "Suggest actions the driver should take to improve their focus on driving based on the visual description.",
    "ontological": "Provide a consultation to the driver based on the identified ontological entities related to driving focus.",
}

# (title, keyword, activity)
CASES = [
    ("Drinking Coffee during driving", "coffee", "sipping coffee from a mug"),
    ("Focus on the road during driving", "attentive", "attentive, watching the lane ahead"),
    ("holding a cup during driving", "cup", "holding a cup in one hand"),
    ("looking down during driving", "lap", "looking down toward the lap"),
    ("looking to passenger during driving", "passenger", "turned toward the passenger seat"),
    ("using radio during driving", "radio", "adjusting the radio dial"),
    ("using mobile during driving", "texting", "texting on a handheld device"),
    ("sleeping during driving", "asleep", "asleep with eyes closed"),
    ("smoking during driving", "cigarette", "holding a lit cigarette"),
    ("speaking in mobile during driving", "call", "on a call with a device at the ear"),
]

TABLE1 = {  # case -> (visual kind, llm kind)
    1: ("ontological", "action_oriented"),
    2: ("ontological", "consultative"),
    3: ("behavioral_description", "consultative"),
    4: ("focused_description", "consultative"),
    5: ("focused_description", "consultative"),
    6: ("behavioral_description", "action_oriented"),
    7: ("behavioral_description", "consultative"),
    8: ("focused_description", "consultative"),
    9: ("behavioral_description", "action_oriented"),
    10: ("behavioral_description", "consultative"),
}


def describe(kind, activity):
    if kind == "focused_description":
        return f"The driver's focus is reduced while {activity}."
    if kind == "behavioral_description":
        return f"The driver is {activity} while steering."
    return f"Entities in view: driver, steering wheel, and the driver {activity}."


def advise(kind, keyword):
    if kind == "consultative":
        return f"Your attention is divided ({keyword}); please return your focus to driving."
    if kind == "action_oriented":
        return f"Stop the {keyword} activity now and place both hands on the wheel."
    return f"Given the {keyword} entity near the driver, stay alert and watch the road."


def promptlab():
    base = DATA / "promptlab"
    frames = base / "frames"
    frames.mkdir(parents=True, exist_ok=True)
    mock = {"default": "A driver is seated in a car.", "entries": []}
    stub = {"default": "Please keep your attention on the road.", "entries": []}
    lines = ["cases:"]
    for i, (title, keyword, activity) in enumerate(CASES, start=1):
        name = f"case{i:02d}.png"
        frame(frames / name, 20 * i, i * 7)
        lines += [f"  - case_id: {i}", f"    label: \"{title}\"", f"    frames: [frames/{name}]"]
        for kind, prompt in VISUAL.items():
            mock["entries"].append(
                {"label": title, "prompt": prompt, "text": describe(kind, activity)})
        for kind, prompt in LLM.items():
            stub["entries"].append(
                {"system": prompt, "user_contains": activity, "text": advise(kind, keyword)})
    (base / "cases.yaml").write_text("\n".join(lines) + "\n")
    (base / "mock_script.json").write_text(json.dumps(mock, indent=2) + "\n")
    (base / "llm_stub.json").write_text(json.dumps(stub, indent=2) + "\n")
    rubric = ["case_id\taxis\tkind\tscore"]
    for case, (best_v, best_l) in TABLE1.items():
        for kind in VISUAL:
            rubric.append(f"{case}\tvisual\t{kind}\t{1.0 if kind == best_v else 0.0}")
        for kind in LLM:
            rubric.append(f"{case}\tllm\t{kind}\t{1.0 if kind == best_l else 0.0}")
    (base / "rubric.tsv").write_text("\n".join(rubric) + "\n")


if __name__ == "__main__":
    carmate()
    promptlab()
