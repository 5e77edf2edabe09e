export const SERVICE_PORT = 8931;
export const SERVICE_URL = `http://127.0.0.1:${SERVICE_PORT}`;
