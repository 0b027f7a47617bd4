import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from feakit.client import (
    ChatRequest,
    ClientConfig,
    GenerationParams,
    HttpVlmClient,
    ImagePart,
    Message,
    ProtocolError,
    RequestError,
    ScriptExhaustedError,
    TextPart,
    TransportError,
    complete,
    encode_request,
    load_script,
    scripted_mock,
)


class _RecordingServer:
    """Local endpoint whose per-request behavior follows a scripted status plan."""

    def __init__(self, plan):
        self.plan = list(plan)
        self.bodies = []
        self.auth_headers = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                outer.bodies.append(self.rfile.read(length))
                outer.auth_headers.append(self.headers.get("Authorization"))
                step = outer.plan.pop(0) if outer.plan else 200
                if step == "garbage":
                    body = b"not json"
                    self.send_response(200)
                elif step == "empty":
                    body = json.dumps({"choices": []}).encode()
                    self.send_response(200)
                elif step == 200:
                    body = json.dumps({"choices": [{"message": {"content": "scripted reply"}}]}).encode()
                    self.send_response(200)
                else:
                    body = b'{"error": "scripted failure"}'
                    self.send_response(step)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"


def _request(prompt="hello", temperature=0.5):
    return GenerationParams(model="test-model", temperature=temperature, max_tokens=64).request(prompt)


def _config(url, retries=3):
    return ClientConfig(endpoint_url=url, max_transport_retries=retries, backoff_base_seconds=0.0, timeout_seconds=5.0)


class TestChatRequest:
    def test_requires_user_message(self):
        with pytest.raises(ValueError):
            ChatRequest(model="m", messages=(Message("system", (TextPart("s"),)),), temperature=0.5, max_tokens=10)

    def test_at_most_one_image(self):
        image = ImagePart(data=b"123", media_type="image/jpeg")
        with pytest.raises(ValueError):
            ChatRequest(
                model="m",
                messages=(Message("user", (TextPart("t"), image, image)),),
                temperature=0.5,
                max_tokens=10,
            )

    def test_bad_sampling_params(self):
        with pytest.raises(ValueError):
            _request(temperature=-0.1)
        with pytest.raises(ValueError):
            ChatRequest(model="m", messages=(Message("user", (TextPart("t"),)),), temperature=0.5, max_tokens=0)


class TestEncodeRequest:
    def test_deterministic_bytes(self):
        a = encode_request(_request())
        b = encode_request(_request())
        assert a == b

    def test_wire_shape(self):
        image = ImagePart(data=b"\x00\x01", media_type="image/png")
        request = GenerationParams(model="m", temperature=0.2, max_tokens=8).request("look", image=image)
        payload = json.loads(encode_request(request))
        assert list(payload) == ["model", "messages", "temperature", "max_tokens"]
        content = payload["messages"][0]["content"]
        assert content[0] == {"type": "text", "text": "look"}
        assert content[1]["type"] == "image"
        assert content[1]["media_type"] == "image/png"
        assert content[1]["data"] == "AAE="


class TestComplete:
    def test_success(self):
        with _RecordingServer([200]) as srv:
            assert complete(_request(), _config(srv.url)) == "scripted reply"

    def test_retries_then_success(self):
        with _RecordingServer([503, 503, 200]) as srv:
            assert complete(_request(), _config(srv.url, retries=3)) == "scripted reply"
            assert len(srv.bodies) == 3

    def test_retry_budget_exhausted(self):
        with _RecordingServer([503, 503, 503]) as srv:
            with pytest.raises(TransportError):
                complete(_request(), _config(srv.url, retries=2))
            assert len(srv.bodies) == 3  # 1 + max_transport_retries

    def test_429_is_retryable(self):
        with _RecordingServer([429, 200]) as srv:
            assert complete(_request(), _config(srv.url)) == "scripted reply"

    def test_401_fails_immediately(self):
        with _RecordingServer([401, 200]) as srv:
            with pytest.raises(RequestError):
                complete(_request(), _config(srv.url))
            assert len(srv.bodies) == 1

    def test_garbage_body_is_protocol_error(self):
        with _RecordingServer(["garbage"]) as srv:
            with pytest.raises(ProtocolError):
                complete(_request(), _config(srv.url))

    def test_missing_choices_is_protocol_error(self):
        with _RecordingServer(["empty"]) as srv:
            with pytest.raises(ProtocolError):
                complete(_request(), _config(srv.url))

    def test_unreachable_endpoint(self):
        config = ClientConfig(
            endpoint_url="http://127.0.0.1:9/nothing", max_transport_retries=1,
            backoff_base_seconds=0.0, timeout_seconds=0.2,
        )
        with pytest.raises(TransportError):
            complete(_request(), config)

    def test_identical_wire_bytes_across_calls(self):
        with _RecordingServer([200, 200]) as srv:
            client = HttpVlmClient(_config(srv.url))
            request = _request("same prompt")
            client.complete(request)
            client.complete(request)
            assert srv.bodies[0] == srv.bodies[1]

    def test_auth_header_from_env(self, monkeypatch):
        monkeypatch.setenv("VLM_API_KEY", "sekret")
        with _RecordingServer([200]) as srv:
            complete(_request(), _config(srv.url))
            assert srv.auth_headers[0] == "Bearer sekret"

    def test_no_auth_header_when_env_unset(self, monkeypatch):
        monkeypatch.delenv("VLM_API_KEY", raising=False)
        with _RecordingServer([200]) as srv:
            complete(_request(), _config(srv.url))
            assert srv.auth_headers[0] is None


class TestScriptedMock:
    def test_replies_in_order(self):
        client = scripted_mock(["a", "b"])
        assert client.complete(_request()) == "a"
        assert client.complete(_request()) == "b"

    def test_scripted_failure(self):
        client = scripted_mock([TransportError("scripted")])
        with pytest.raises(TransportError):
            client.complete(_request())

    def test_exhaustion(self):
        client = scripted_mock(["only"])
        client.complete(_request())
        with pytest.raises(ScriptExhaustedError):
            client.complete(_request())

    def test_call_log(self):
        client = scripted_mock(["a", "b", "c"])
        for i, temp in enumerate((0.7, 0.8, 0.9)):
            client.complete(_request(f"p{i}", temperature=temp))
        assert [c.prompt for c in client.calls] == ["p0", "p1", "p2"]
        assert [c.temperature for c in client.calls] == [0.7, 0.8, 0.9]

    def test_empty_script_rejected(self):
        with pytest.raises(ValueError):
            scripted_mock([])

    def test_loop_mode(self):
        client = scripted_mock(["x"], loop=True)
        for _ in range(5):
            assert client.complete(_request()) == "x"


class TestLoadScript:
    def test_bare_array(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text('["one", "two"]')
        client = load_script(path)
        assert client.complete(_request()) == "one"

    def test_object_with_loop_and_error(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps({"replies": ["ok", {"error": "transport"}], "loop": True}))
        client = load_script(path)
        assert client.complete(_request()) == "ok"
        with pytest.raises(TransportError):
            client.complete(_request())
        assert client.complete(_request()) == "ok"

    def test_bad_entry_rejected(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text('[{"error": "nonsense"}]')
        with pytest.raises(ValueError):
            load_script(path)
