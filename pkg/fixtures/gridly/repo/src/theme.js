// Default shading palette.
const DEFAULT_THEME = {
  light: "#f5f5f5",
  dark: "#333333",
};

window.gridlyTheme = DEFAULT_THEME;
