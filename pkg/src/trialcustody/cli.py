"""Command-line front door for trial organizations and investigators.

Every command maps onto a service endpoint and can run either against a
remote server (--server URL) or a fully embedded stack (--embedded with
--data-root).  Signing happens locally with the key file given via --key;
secret keys are never transmitted.

Exit codes: 0 ok, 2 usage or invalid input, 3 integrity failure,
4 authentication/authorization failure, 5 not found.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import bench as bench_mod
from . import keys
from .client import ApiError, EmbeddedBackend, HttpBackend
from .config import NodeConfig, load_config
from .integrity import STATUS_MISMATCH, STATUS_NO_BLOB, STATUS_VERIFIED
from .node import Node

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTEGRITY = 3
EXIT_AUTH = 4
EXIT_NOT_FOUND = 5

_STATUS_EXIT = {401: EXIT_AUTH, 403: EXIT_AUTH, 404: EXIT_NOT_FOUND}


def _fail(error: ApiError) -> None:
    machine = {"error": error.body.get("error") or "ApiError", "status": error.status,
               "message": str(error)}
    click.echo(json.dumps(machine), err=True)
    sys.exit(_STATUS_EXIT.get(error.status, EXIT_USAGE))


class Context:
    def __init__(self, server, embedded, data_root, config_path, key_path, as_json):
        self.server = server
        self.embedded = embedded
        self.data_root = data_root
        self.config_path = config_path
        self.key_path = key_path
        self.as_json = as_json
        self._backend = None

    def identity(self):
        if self.key_path is None:
            raise click.UsageError("this command needs --key")
        return keys.load_key_file(self.key_path)

    def backend(self):
        if self._backend is not None:
            return self._backend
        if self.server:
            self._backend = HttpBackend(self.server)
        else:
            config = load_config(self.config_path) if self.config_path else NodeConfig()
            if self.data_root:
                config.data_root = Path(self.data_root)
            owner = None
            # A fresh embedded data root is deployed under the caller's key.
            if self.key_path is not None:
                owner = keys.load_key_file(self.key_path).public_key
            self._backend = EmbeddedBackend(Node(config, owner_public_key=owner))
        return self._backend

    def emit(self, body: dict, human: str = "") -> None:
        if self.as_json:
            click.echo(json.dumps(body, indent=2))
        elif human:
            click.echo(human)


pass_context = click.make_pass_decorator(Context)


@click.group()
@click.option("--server", metavar="URL", help="drive a running service over HTTP")
@click.option("--embedded", is_flag=True, help="run the stack in-process (default)")
@click.option("--data-root", type=click.Path(), help="data directory for embedded mode")
@click.option("--config", "config_path", type=click.Path(exists=True), help="config JSON")
@click.option("--key", "key_path", type=click.Path(exists=True), help="key file for signing")
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@click.pass_context
def main(ctx, server, embedded, data_root, config_path, key_path, as_json):
    """Chain-of-custody tooling for trial evidence data."""
    if server and embedded:
        raise click.UsageError("--server and --embedded are mutually exclusive")
    ctx.obj = Context(server, embedded, data_root, config_path, key_path, as_json)


@main.command()
@click.argument("out", type=click.Path())
@pass_context
def keygen(ctx, out):
    """Generate a keypair and write it to a key file."""
    identity = keys.generate_identity()
    keys.save_key_file(identity, out)
    ctx.emit(
        {"public_key": identity.public_key.hex(), "key_file": str(out)},
        f"public key {identity.public_key.hex()}\nkey file written to {out}",
    )


@main.group()
def whitelist():
    """Manage the submitter whitelist (owner only)."""


@whitelist.command("add")
@click.argument("public_key")
@pass_context
def whitelist_add(ctx, public_key):
    try:
        body = ctx.backend().whitelist(ctx.identity(), "add", bytes.fromhex(public_key))
    except ApiError as exc:
        _fail(exc)
    height = body["receipt"]["block_height"]
    ctx.emit(body, f"whitelisted {public_key} (block {height})")


@whitelist.command("remove")
@click.argument("public_key")
@pass_context
def whitelist_remove(ctx, public_key):
    try:
        body = ctx.backend().whitelist(ctx.identity(), "remove", bytes.fromhex(public_key))
    except ApiError as exc:
        _fail(exc)
    height = body["receipt"]["block_height"]
    ctx.emit(body, f"removed {public_key} (block {height})")


@main.group()
def manifest():
    """Required-dataset manifests."""


@manifest.command("set")
@click.argument("trial_id")
@click.argument("filenames", nargs=-1, required=True)
@pass_context
def manifest_set(ctx, trial_id, filenames):
    """Register the required dataset filenames for a trial."""
    try:
        body = ctx.backend().set_manifest(ctx.identity(), trial_id, list(filenames))
    except ApiError as exc:
        _fail(exc)
    height = body["receipt"]["block_height"]
    ctx.emit(
        body,
        f"manifest for {trial_id}: {len(filenames)} required files (block {height})",
    )


@main.group()
def record():
    """Dataset metadata records."""


@record.command("add")
@click.argument("trial_id")
@click.option("--file", "file_path", type=click.Path(exists=True), help="dataset to upload")
@click.option("--filename", help="recorded filename (defaults to the file's basename)")
@click.option("--hash", "hash_only", metavar="HEX", help="record a digest without uploading")
@pass_context
def record_add(ctx, trial_id, file_path, filename, hash_only):
    """Store a dataset and record its metadata, or record hash-only."""
    if file_path is None and hash_only is None:
        raise click.UsageError("need --file or --hash")
    if file_path is not None and hash_only is not None:
        raise click.UsageError("--file and --hash are mutually exclusive")
    data = None
    if file_path is not None:
        data = Path(file_path).read_bytes()
        from .integrity import hash_file

        file_hash = hash_file(data)
        filename = filename or Path(file_path).name
    else:
        file_hash = hash_only
        if not filename:
            raise click.UsageError("--hash needs --filename")
    try:
        body = ctx.backend().add_record(ctx.identity(), trial_id, filename, file_hash, data)
    except ApiError as exc:
        _fail(exc)
    receipt = body["receipt"]
    ctx.emit(
        body,
        f"record {body.get('record_id')} for {filename} "
        f"(hash {file_hash[:12]}…, block {receipt['block_height']})",
    )


@main.group()
def trial():
    """Per-trial queries."""


@trial.command("status")
@click.argument("trial_id")
@pass_context
def trial_status(ctx, trial_id):
    """Completeness against the manifest: what is submitted, what is missing."""
    try:
        body = ctx.backend().completeness(trial_id)
    except ApiError as exc:
        _fail(exc)
    submitted = len(body["submitted"])
    missing = body["missing"]
    lines = [f"trial {trial_id}: {submitted} submitted, {len(missing)} missing"]
    for name in missing:
        lines.append(f"  missing: {name}")
    ctx.emit(body, "\n".join(lines))


@main.group()
def file():
    """Per-file queries."""


@file.command("history")
@click.argument("trial_id")
@click.argument("filename")
@pass_context
def file_history(ctx, trial_id, filename):
    """Change history of one dataset, oldest first."""
    try:
        body = ctx.backend().history(trial_id, filename)
    except ApiError as exc:
        _fail(exc)
    lines = [f"{len(body['history'])} record(s) for {filename} in {trial_id}"]
    for entry in body["history"]:
        lines.append(
            f"  #{entry['record_id']} {entry['file_hash'][:16]}… "
            f"at {entry['timestamp']} by {entry['submitter'][:16]}…"
        )
    ctx.emit(body, "\n".join(lines))


@main.command()
@click.argument("trial_id")
@pass_context
def verify(ctx, trial_id):
    """Verify every dataset of a trial against its ledger digest."""
    try:
        body = ctx.backend().verify_trial(trial_id)
    except ApiError as exc:
        _fail(exc)
    lines = []
    failed = 0
    for verdict in body["verdicts"]:
        lines.append(f"  {verdict['filename']}: {verdict['status']}")
        if verdict["status"] in (STATUS_MISMATCH, STATUS_NO_BLOB):
            failed += 1
    counts = body["counts"]
    lines.insert(
        0,
        f"trial {trial_id}: {counts[STATUS_VERIFIED]} verified, "
        f"{counts[STATUS_MISMATCH]} mismatch, {len(body['missing'])} missing",
    )
    ctx.emit(body, "\n".join(lines))
    if failed:
        sys.exit(EXIT_INTEGRITY)


@main.group()
def chain():
    """Ledger maintenance."""


@chain.command("check")
@pass_context
def chain_check(ctx):
    """Recompute every block hash and link; report the first bad height."""
    try:
        body = ctx.backend().chain_verify()
    except ApiError as exc:
        _fail(exc)
    if body["ok"]:
        ctx.emit(body, f"chain ok ({body['length']} blocks)")
    else:
        ctx.emit(body, f"chain TAMPERED at height {body['bad_height']}")
        sys.exit(EXIT_INTEGRITY)


@main.command(name="bench")
@click.option("--sizes", default="1MiB,8MiB,64MiB", show_default=True,
              help="comma-separated file sizes")
@click.option("--repeat", default=1, show_default=True, help="best-of-N timing")
@click.option("--out", "out_path", type=click.Path(), help="write CSV here (default stdout)")
@pass_context
def bench(ctx, sizes, repeat, out_path):
    """Time import, hash, and download for generated files; emit CSV."""
    try:
        size_list = bench_mod.parse_sizes(sizes)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    rows = bench_mod.run_bench(size_list, repeat=repeat)
    csv_text = bench_mod.rows_to_csv(rows)
    if out_path:
        Path(out_path).write_text(csv_text)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(csv_text, nl=False)


@main.command()
@click.option("--host", default=None, help="override listen host")
@click.option("--port", type=int, default=None, help="override listen port")
@click.option("--owner", "owner_hex", help="owner public key (hex) for a fresh data root")
@pass_context
def serve(ctx, host, port, owner_hex):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = load_config(ctx.config_path) if ctx.config_path else NodeConfig()
    if ctx.data_root:
        config.data_root = Path(ctx.data_root)
    owner = bytes.fromhex(owner_hex) if owner_hex else None
    node = Node(config, owner_public_key=owner)
    app = create_app(node)
    uvicorn.run(app, host=host or config.listen_host, port=port or config.port)


if __name__ == "__main__":
    main()
