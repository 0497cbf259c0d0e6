"""Checks a running or spawned model server against schemas/wire.schema.json.

Usage: check_wire.py <schema> (--stub <polyeval-stub binary> | --url <base url>)
"""
import argparse
import json
import math
import socket
import subprocess
import sys
import time
import urllib.request

import jsonschema


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def call(base, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data, headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=10) as resp:
        return json.loads(resp.read())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("schema")
    ap.add_argument("--stub")
    ap.add_argument("--url")
    args = ap.parse_args()

    with open(args.schema, encoding="utf-8") as f:
        schema = json.load(f)

    def check(kind, doc):
        jsonschema.validate(doc, {"$ref": "#/$defs/" + kind, "$defs": schema["$defs"]})

    proc = None
    base = args.url
    if args.stub:
        port = free_port()
        proc = subprocess.Popen([args.stub, "--port", str(port), "--toy", "uniform:8"], stdout=subprocess.DEVNULL)
        base = f"http://127.0.0.1:{port}"
    failures = []
    try:
        for _ in range(100):
            try:
                check("health_response", call(base, "/v1/health"))
                break
            except OSError:
                time.sleep(0.05)

        requests = [
            ("generate", {"prompt": "line one\nx y z", "max_new_tokens": 2, "stop": []}),
            ("generate", {"prompt": "abc", "max_new_tokens": 0, "stop": ["\n\n"]}),
            ("score_choices", {"prompt": "Is it?", "choices": ["yes", "no", "maybe not"]}),
            ("token_nll", {"text": "a b c d e"}),
            ("token_nll", {"text": "a b c d e", "start": 1, "end": 4}),
        ]
        for kind, body in requests:
            check(kind + "_request", body)
            resp = call(base, "/v1/" + kind, body)
            check(kind + "_response", resp)
            if kind == "score_choices":
                assert len(resp["choice_logits"]) == len(body["choices"])
            if kind == "token_nll":
                assert resp["token_count"] == len(resp["token_logprobs"])
                assert all(abs(lp + math.log(8)) < 1e-12 for lp in resp["token_logprobs"])
        assert call(base, "/v1/generate", requests[0][1])["output_text"] == "x y"
        assert call(base, "/v1/generate", {"prompt": "x", "max_new_tokens": 4, "stop": []}) == call(
            base, "/v1/generate", {"prompt": "x", "max_new_tokens": 4, "stop": []})

        tr = {"texts": ["Hello {src_text}"], "from": "eng_Latn", "to": ["fra_Latn", "deu_Latn"]}
        check("translate_request", tr)
        check("translate_response", call(base, "/translate", tr))
    except (AssertionError, jsonschema.ValidationError) as e:
        failures.append(str(e))
    finally:
        if proc:
            proc.terminate()
            proc.wait()

    if failures:
        print("wire conformance FAILED:", *failures, sep="\n")
        return 1
    print("wire conformance ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
