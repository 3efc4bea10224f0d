from flask import Flask, jsonify
from flask_cors import CORS
from endpoints.analysis import analysis_bp
from services.harness import VERSION
from services.presets import preset_names
from utils.settings import load_settings, configure_logging

# Load environment variables
settings = load_settings()
configure_logging(settings.log_level)

app = Flask(__name__)
CORS(app)

# Make settings available to blueprints
app.config['SIMULATOR_SETTINGS'] = settings

# Register blueprints
app.register_blueprint(analysis_bp, url_prefix='/api/analysis')

SCHEMAS = ['rho-v1', 'evolution-v1', 'schedule-v1', 'calibration-v1', 'diagnostics-v1',
           'summary-v1', 'coherence-v1', 'coherence-fit-v1', 'manifest-v1']


@app.route('/health', methods=['GET'])
def health_check():
    return jsonify({
        'status': 'healthy',
        'service': 'nv-pulse-simulator',
        'version': VERSION
    }), 200


@app.route('/', methods=['GET'])
def root():
    return jsonify({
        'message': 'NV Pulse Simulator Analysis API',
        'version': VERSION,
        'endpoints': [
            '/health - Health check',
            '/api/simulator/info - Presets, schemas and conventions',
            '/api/analysis/diagnose - Purity, PPT and CHSH diagnostics of a density matrix',
            '/api/analysis/tomography - Reconstruct a density matrix from Pauli-setting counts',
            '/api/analysis/batch - Diagnose multiple density matrices'
        ]
    }), 200


@app.route('/api/simulator/info', methods=['GET'])
def simulator_info():
    """Get presets, output schemas and conventions"""
    return jsonify({
        'version': VERSION,
        'presets': preset_names(),
        'schemas': SCHEMAS,
        'qubit_order': 'qubit 0 is the left Kronecker factor; basis |00>, |01>, |10>, |11>',
        'matrix_encoding': 'row-major nested [re, im] pairs',
        'default_shots': settings.shots,
        'default_seed': settings.seed,
    }), 200


if __name__ == '__main__':
    app.run(host='0.0.0.0', port=settings.port, debug=settings.debug)
