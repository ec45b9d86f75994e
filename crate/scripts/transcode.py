#!/usr/bin/env python3
"""Run ffmpeg for every job in a clipcurate transcode plan.

    clipcurate plan-transcode --out plan.jsonl
    scripts/transcode.py plan.jsonl --videos /data/videos --out /data/clips

Source files are looked up as <videos>/<video_id>.* (first match). Use
--dry-run to print the commands instead of running them.
"""

import argparse
import glob
import json
import os
import shlex
import subprocess
import sys

CODECS = {"h265": "libx265", "h264": "libx264"}


def command(job, src, out_dir):
    v, a = job["video"], job["audio"]
    dst = os.path.join(out_dir, f"{job['clip_id']}.{v['container']}")
    cmd = [
        "ffmpeg", "-nostdin", "-y",
        "-ss", f"{job['start_s']:.3f}", "-to", f"{job['end_s']:.3f}", "-i", src,
        "-vf", f"scale={v['width']}:{v['height']},fps={v['fps']}",
        "-c:v", CODECS.get(v["codec"], v["codec"]), "-b:v", f"{v['bitrate_kbps']}k",
    ]
    if a["mux"]:
        cmd += ["-c:a", a["codec"], "-ar", str(a["sample_rate_hz"])]
    else:
        cmd += ["-an"]
    return cmd + [dst]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("plan")
    p.add_argument("--videos", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dry-run", action="store_true")
    args = p.parse_args()

    os.makedirs(args.out, exist_ok=True)
    failed = 0
    with open(args.plan, encoding="utf-8") as f:
        for line in f:
            job = json.loads(line)
            matches = sorted(glob.glob(os.path.join(args.videos, glob.escape(job["video_id"]) + ".*")))
            if not matches:
                print(f"{job['clip_id']}: no source file for {job['video_id']}", file=sys.stderr)
                failed += 1
                continue
            cmd = command(job, matches[0], args.out)
            if args.dry_run:
                print(shlex.join(cmd))
            elif subprocess.run(cmd, stderr=subprocess.DEVNULL).returncode != 0:
                print(f"{job['clip_id']}: ffmpeg failed", file=sys.stderr)
                failed += 1
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
