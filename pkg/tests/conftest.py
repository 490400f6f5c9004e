import json

import pytest

from apiscope.corpus import ApiMethod, Thread


def make_thread(thread_id=1, title="t", body_paragraphs=(), snippets=(), tags=()):
    return Thread(
        id=thread_id,
        title=title,
        tags=tuple(tags),
        paragraphs=(title, *body_paragraphs),
        code_snippets=tuple(snippets),
    )


def make_api(fqn, comment="", impl_code=""):
    return ApiMethod(fqn=fqn, comment=comment, impl_code=impl_code)


def record_line(**fields) -> str:
    return json.dumps(fields)


@pytest.fixture
def mini_corpus():
    return [
        make_thread(1, "stubbing question", ["when should thenReturn run"], ["when(x).thenReturn(y);"]),
        make_thread(2, "unrelated", ["nothing to see"], ["plain();"]),
        make_thread(3, "another stub", ["thenReturn everywhere"], []),
    ]
