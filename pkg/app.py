"""
GROWTHLAB - Flask Backend
JSON API over the same command dispatcher as the command line
"""

import logging

from flask import Flask, jsonify, request
from flask_cors import CORS

import config
from cli import COMMANDS, run
from errors import UsageError
from presets import list_presets

logging.basicConfig(level=getattr(logging, config.LOG_LEVEL, logging.WARNING),
                    format='%(levelname)s %(name)s: %(message)s')
logger = logging.getLogger(__name__)

app = Flask(__name__)
CORS(app)

# Documents a command may take inline instead of a file path
DOCUMENT_SLOTS = ('input', 'other', 'candidate', 'module')


def options_to_argv(command, options, documents):
    """{'n_max': 10, 'lehmer': True} -> [command, '--n-max', '10', '--lehmer']"""
    argv = [command]
    # positional document slot still needs a placeholder for argparse
    if 'input' in documents and command not in ('entropy-bound',):
        argv.append('inline')
    for key, value in sorted(options.items()):
        flag = '--' + key.replace('_', '-')
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        elif isinstance(value, (list, tuple)):
            argv.extend([flag, ','.join(str(v) for v in value)])
        else:
            argv.extend([flag, str(value)])
    for slot in DOCUMENT_SLOTS[1:]:
        if slot in documents:
            argv.extend(['--' + slot, 'inline'])
    return argv


def _respond(status, report):
    if status == 0:
        return jsonify(report), 200
    if report is not None and report['diagnostics'].get('error', {}).get('kind') == 'internal':
        return jsonify({'error': report['diagnostics']['error']['message'], 'report': report}), 500
    return jsonify(report), 400


# ============================================================
# ROUTES
# ============================================================

@app.route('/api/health', methods=['GET'])
def health():
    """Liveness check"""
    return jsonify({'status': 'ok', 'commands': list(COMMANDS)})


@app.route('/api/presets', methods=['GET'])
def presets():
    return jsonify(list_presets())


@app.route('/api/run', methods=['POST'])
def run_argv():
    """Run a raw argv list: {"argv": ["entropy-bound", "--gamma", "1", "--rho", "2"]}"""
    data = request.get_json(silent=True) or {}
    argv = data.get('argv')
    if not isinstance(argv, list) or not all(isinstance(a, str) for a in argv):
        return jsonify({'error': 'argv must be a list of strings'}), 400
    try:
        status, report = run(argv, documents=data.get('documents'), write=False)
    except Exception as e:
        logger.exception("run failed")
        return jsonify({'error': str(e)}), 500
    if report is None:
        return jsonify({'error': 'help requested'}), 400
    return _respond(status, report)


@app.route('/api/<command>', methods=['POST'])
def run_command(command):
    """Run one command from {"options": {...}, "document": {...}, "documents": {...}}"""
    if command not in COMMANDS:
        return jsonify({'error': f"unknown command {command!r}"}), 404
    data = request.get_json(silent=True) or {}
    options = data.get('options') or {}
    if not isinstance(options, dict):
        return jsonify({'error': 'options must be an object'}), 400
    documents = dict(data.get('documents') or {})
    if 'document' in data:
        documents['input'] = data['document']
    try:
        argv = options_to_argv(command, options, documents)
        status, report = run(argv, documents=documents, write=False)
    except UsageError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.exception("command %s failed", command)
        return jsonify({'error': str(e)}), 500
    return _respond(status, report)


if __name__ == '__main__':
    print("\n" + "=" * 60)
    print("GROWTHLAB API Starting...")
    print("=" * 60)
    print(f"  Commands: {', '.join(COMMANDS)}")
    print(f"  Port: {config.PORT}")
    print("=" * 60 + "\n")

    app.run(host='0.0.0.0', port=config.PORT)
