"""Small builders shared by the tests."""

import json


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    return path


def rec(tid, user, text, kind="post", ref=None, emotions=None):
    return {
        "tweet_id": tid,
        "user_id": user,
        "text": text,
        "interaction_kind": kind,
        "referenced_tweet_id": ref,
        "emotions": emotions,
    }
